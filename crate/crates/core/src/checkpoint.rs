//! Plain-text checkpoint container.
//!
//! ```text
//! NEURALCD v1
//! dims N M K h1 h2
//! family neuralcdm
//! A 3 2
//! 1.2000000000000000e-1 -3.4000000000000002e0
//! ...
//! ```
//!
//! Each matrix is a `name rows cols` line followed by `rows` lines of `cols`
//! space-separated values with 17 significant digits, which round-trips any
//! `f64` exactly. Families without hidden layers write `h1 = h2 = 0`; for
//! MF, `K` is the number of latent factors.

use std::fmt::{self, Write as _};
use std::io;
use std::path::Path;
use std::str::FromStr;

use crate::baselines::{IrtParams, MfParams, MirtParams};
use crate::dataset::ResponseLog;
use crate::error::{Error, Result};
use crate::neuralcdm::{ModelParams, TENSOR_NAMES};
use crate::numeric::Matrix;
use crate::qrefine::{effective_q, RefinedQ};
use crate::trainer::{predict_logs, Model};

pub const MAGIC: &str = "NEURALCD v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    NeuralCdm,
    NeuralCdmPlus,
    Irt,
    Mirt,
    Mf,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::NeuralCdm,
        Family::NeuralCdmPlus,
        Family::Irt,
        Family::Mirt,
        Family::Mf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::NeuralCdm => "neuralcdm",
            Family::NeuralCdmPlus => "neuralcdm+",
            Family::Irt => "irt",
            Family::Mirt => "mirt",
            Family::Mf => "mf",
        }
    }

    /// Whether the family's student factors are aligned with concepts.
    pub fn has_concept_proficiency(self) -> bool {
        matches!(self, Family::NeuralCdm | Family::NeuralCdmPlus)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            Error::config(format!(
                "unknown model family `{s}` (expected neuralcdm, neuralcdm+, irt, mirt or mf)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub family: Family,
    /// `N M K h1 h2`.
    pub dims: [usize; 5],
    pub tensors: Vec<(String, Matrix)>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::data(format!("checkpoint has no `{name}` matrix")))
    }

    fn take(&mut self, name: &str) -> Result<Matrix> {
        let pos = self
            .tensors
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::data(format!("checkpoint has no `{name}` matrix")))?;
        Ok(self.tensors.remove(pos).1)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let [n, m, k, h1, h2] = self.dims;
        let _ = writeln!(out, "{MAGIC}\ndims {n} {m} {k} {h1} {h2}\nfamily {}", self.family);
        for (name, mat) in &self.tensors {
            let _ = writeln!(out, "{name} {} {}", mat.rows(), mat.cols());
            for r in 0..mat.rows() {
                let row: Vec<String> = mat.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn write<W: io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l.trim()));
        let err = |line: u64, message: String| Error::Parse {
            path: source.to_owned(),
            line,
            message,
        };
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
        };

        let (ln, magic) = next("header")?;
        if magic != MAGIC {
            return Err(err(ln, format!("expected `{MAGIC}`, found `{magic}`")));
        }
        let (ln, dims_line) = next("dims line")?;
        let fields: Vec<&str> = dims_line.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "dims" {
            return Err(err(ln, "expected `dims N M K h1 h2`".into()));
        }
        let mut dims = [0usize; 5];
        for (d, f) in dims.iter_mut().zip(&fields[1..]) {
            *d = f.parse().map_err(|_| err(ln, format!("bad dimension `{f}`")))?;
        }
        let (ln, fam_line) = next("family line")?;
        let family = match fam_line.split_once(' ') {
            Some(("family", name)) => name.trim().parse().map_err(|e: Error| err(ln, e.to_string()))?,
            _ => return Err(err(ln, "expected `family NAME`".into())),
        };

        let mut tensors = Vec::new();
        while let Some((ln, head)) = lines.next() {
            if head.is_empty() {
                continue;
            }
            let parts: Vec<&str> = head.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(err(ln, format!("expected `name rows cols`, found `{head}`")));
            };
            let rows: usize = rows.parse().map_err(|_| err(ln, format!("bad row count `{rows}`")))?;
            let cols: usize = cols
                .parse()
                .map_err(|_| err(ln, format!("bad column count `{cols}`")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, row) = lines
                    .next()
                    .ok_or_else(|| err(0, format!("matrix `{name}` is truncated")))?;
                let before = data.len();
                for tok in row.split_whitespace() {
                    data.push(tok.parse::<f64>().map_err(|_| err(ln, format!("bad number `{tok}`")))?);
                }
                if data.len() - before != cols {
                    return Err(err(
                        ln,
                        format!(
                            "matrix `{name}` row has {} values, expected {cols}",
                            data.len() - before
                        ),
                    ));
                }
            }
            let mat = Matrix::from_vec(rows, cols, data).map_err(|e| err(ln, e.to_string()))?;
            tensors.push((name.to_owned(), mat));
        }
        Ok(Checkpoint { family, dims, tensors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Checkpoint::parse(&std::fs::read_to_string(path)?, path)
    }
}

/// A trained model of any family, with whatever it needs to predict.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    NeuralCdm { params: ModelParams, q: Matrix },
    NeuralCdmPlus { params: ModelParams, refined: RefinedQ },
    Irt(IrtParams),
    Mirt(MirtParams),
    Mf(MfParams),
}

fn neural_tensors(params: &ModelParams) -> Vec<(String, Matrix)> {
    params
        .named_tensors()
        .into_iter()
        .map(|(n, m)| (n.to_owned(), m.clone()))
        .collect()
}

fn scalar(v: f64) -> Matrix {
    Matrix::filled(1, 1, v)
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::NeuralCdm { .. } => Family::NeuralCdm,
            TrainedModel::NeuralCdmPlus { .. } => Family::NeuralCdmPlus,
            TrainedModel::Irt(_) => Family::Irt,
            TrainedModel::Mirt(_) => Family::Mirt,
            TrainedModel::Mf(_) => Family::Mf,
        }
    }

    pub fn n_students(&self) -> usize {
        match self {
            TrainedModel::NeuralCdm { params, .. } | TrainedModel::NeuralCdmPlus { params, .. } => params.n_students(),
            TrainedModel::Irt(p) => p.n_students(),
            TrainedModel::Mirt(p) => p.n_students(),
            TrainedModel::Mf(p) => p.n_students(),
        }
    }

    pub fn n_exercises(&self) -> usize {
        match self {
            TrainedModel::NeuralCdm { params, .. } | TrainedModel::NeuralCdmPlus { params, .. } => params.n_exercises(),
            TrainedModel::Irt(p) => p.n_exercises(),
            TrainedModel::Mirt(p) => p.n_exercises(),
            TrainedModel::Mf(p) => p.n_exercises(),
        }
    }

    /// NeuralCDM parameters, for families that have them.
    pub fn neural_params(&self) -> Option<&ModelParams> {
        match self {
            TrainedModel::NeuralCdm { params, .. } | TrainedModel::NeuralCdmPlus { params, .. } => Some(params),
            _ => None,
        }
    }

    /// N×K concept proficiency `σ(A)`; `None` for families whose factors
    /// have no concept correspondence.
    pub fn proficiency(&self) -> Option<Matrix> {
        self.neural_params().map(|p| p.a.sigmoid())
    }

    /// Relevancy rows fed to the first layer.
    pub fn relevancy(&self) -> Option<Matrix> {
        match self {
            TrainedModel::NeuralCdm { q, .. } => Some(q.clone()),
            TrainedModel::NeuralCdmPlus { refined, .. } => Some(effective_q(refined)),
            _ => None,
        }
    }

    pub fn predict(&self, logs: &[ResponseLog]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::NeuralCdm { params, q } => crate::neuralcdm::predict(params, logs, q),
            TrainedModel::NeuralCdmPlus { params, refined } => {
                crate::neuralcdm::predict(params, logs, &effective_q(refined))
            }
            TrainedModel::Irt(p) => predict_logs(p, logs),
            TrainedModel::Mirt(p) => predict_logs(p, logs),
            TrainedModel::Mf(p) => predict_logs(p, logs),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            TrainedModel::NeuralCdm { params, q } => params.is_finite() && q.all_finite(),
            TrainedModel::NeuralCdmPlus { params, refined } => params.is_finite() && refined.q_tilde.all_finite(),
            TrainedModel::Irt(p) => p.is_finite(),
            TrainedModel::Mirt(p) => p.is_finite(),
            TrainedModel::Mf(p) => p.is_finite(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (n, m) = (self.n_students(), self.n_exercises());
        let (dims, tensors) = match self {
            TrainedModel::NeuralCdm { params, q } => {
                let mut t = neural_tensors(params);
                t.push(("Q".into(), q.clone()));
                ([n, m, params.n_concepts(), params.h1(), params.h2()], t)
            }
            TrainedModel::NeuralCdmPlus { params, refined } => {
                let mut t = neural_tensors(params);
                t.push(("Q_tilde".into(), refined.q_tilde.clone()));
                t.push(("mask".into(), refined.mask.clone()));
                t.push(("lambda".into(), scalar(refined.lambda)));
                t.push(("sigma".into(), scalar(refined.sigma)));
                ([n, m, params.n_concepts(), params.h1(), params.h2()], t)
            }
            TrainedModel::Irt(p) => (
                [n, m, 1, 0, 0],
                vec![
                    ("theta".into(), p.theta.clone()),
                    ("beta".into(), p.beta.clone()),
                    ("a".into(), p.a.clone()),
                ],
            ),
            TrainedModel::Mirt(p) => (
                [n, m, p.q_dir.cols(), 0, 0],
                vec![
                    ("theta".into(), p.theta.clone()),
                    ("Q".into(), p.q_dir.clone()),
                    ("d".into(), p.d.clone()),
                ],
            ),
            TrainedModel::Mf(p) => (
                [n, m, p.factors(), 0, 0],
                vec![("user".into(), p.user.clone()), ("item".into(), p.item.clone())],
            ),
        };
        Checkpoint {
            family: self.family(),
            dims,
            tensors,
        }
    }

    pub fn from_checkpoint(mut ck: Checkpoint) -> Result<Self> {
        let model = match ck.family {
            Family::NeuralCdm | Family::NeuralCdmPlus => {
                let mut tensors = Vec::with_capacity(TENSOR_NAMES.len());
                for name in TENSOR_NAMES {
                    tensors.push(ck.take(name)?);
                }
                let params = ModelParams::from_tensors(tensors)?;
                if ck.family == Family::NeuralCdm {
                    let q = ck.take("Q")?;
                    if q.shape() != (params.n_exercises(), params.n_concepts()) {
                        return Err(Error::Shape(format!("Q is {:?}, expected M×K", q.shape())));
                    }
                    TrainedModel::NeuralCdm { params, q }
                } else {
                    let q_tilde = ck.take("Q_tilde")?;
                    let mask = ck.take("mask")?;
                    let shape = (params.n_exercises(), params.n_concepts());
                    if q_tilde.shape() != shape || mask.shape() != shape {
                        return Err(Error::Shape("Q_tilde and mask must be M×K".into()));
                    }
                    let refined = RefinedQ {
                        q_tilde,
                        mask,
                        lambda: ck.take("lambda")?.get(0, 0),
                        sigma: ck.take("sigma")?.get(0, 0),
                    };
                    TrainedModel::NeuralCdmPlus { params, refined }
                }
            }
            Family::Irt => {
                let (theta, beta, a) = (ck.take("theta")?, ck.take("beta")?, ck.take("a")?);
                let p = IrtParams::new(
                    theta.as_slice().to_vec(),
                    beta.as_slice().to_vec(),
                    a.as_slice().to_vec(),
                )?;
                TrainedModel::Irt(p)
            }
            Family::Mirt => {
                let (theta, q, d) = (ck.take("theta")?, ck.take("Q")?, ck.take("d")?);
                TrainedModel::Mirt(MirtParams::new(theta, q, d.as_slice().to_vec())?)
            }
            Family::Mf => {
                let (user, item) = (ck.take("user")?, ck.take("item")?);
                TrainedModel::Mf(MfParams::new(user, item, true)?)
            }
        };
        let expected = model.to_checkpoint().dims;
        if expected != ck.dims {
            return Err(Error::Shape(format!(
                "dims line {:?} disagrees with matrices {:?}",
                ck.dims, expected
            )));
        }
        Ok(model)
    }
}
