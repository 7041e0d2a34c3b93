//! Classical diagnosis models and their expression inside the neural framework.
//!
//! IRT, MIRT and MF are trained by the same mini-batch loop as NeuralCDM.
//! [`FrameworkNet`] is a generic predictor built from the factor interaction
//! `x = Q_e ∘ (h^s − h^diff) · h^disc` followed by dense layers; the
//! `reduce_framework_to_*` constructors wire it to reproduce each closed form.

use crate::dataset::{QMatrix, ResponseLog, SplitDataset};
use crate::error::{Error, Result};
use crate::numeric::{logit, sigmoid, Adam, Matrix, Rng};
use crate::trainer::{self, cross_entropy, History, Model, TrainConfig, STREAM_INIT};

/// Lower bound enforced on IRT discrimination after every step.
pub const IRT_MIN_DISCRIMINATION: f64 = 1e-6;

const INIT_STD: f64 = 0.1;

fn normal_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = rng.normal(0.0, INIT_STD);
    }
    m
}

fn column(values: Vec<f64>) -> Result<Matrix> {
    Matrix::from_vec(values.len(), 1, values)
}

fn zero_all(ms: &mut [&mut Matrix]) {
    for m in ms {
        m.fill(0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrtParams {
    /// N×1 ability.
    pub theta: Matrix,
    /// M×1 difficulty.
    pub beta: Matrix,
    /// M×1 discrimination, kept positive.
    pub a: Matrix,
}

impl IrtParams {
    pub fn new(theta: Vec<f64>, beta: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if beta.len() != a.len() {
            return Err(Error::Shape(format!(
                "{} difficulties vs {} discriminations",
                beta.len(),
                a.len()
            )));
        }
        if a.iter().any(|&v| v <= 0.0) {
            return Err(Error::data("IRT discrimination must be positive"));
        }
        Ok(IrtParams {
            theta: column(theta)?,
            beta: column(beta)?,
            a: column(a)?,
        })
    }

    pub fn init(n_students: usize, n_exercises: usize, rng: &mut Rng) -> Self {
        IrtParams {
            theta: normal_matrix(n_students, 1, rng),
            beta: normal_matrix(n_exercises, 1, rng),
            a: Matrix::filled(n_exercises, 1, 1.0),
        }
    }

    pub fn n_students(&self) -> usize {
        self.theta.rows()
    }

    pub fn n_exercises(&self) -> usize {
        self.beta.rows()
    }

    fn zeros_like(&self) -> Self {
        IrtParams {
            theta: Matrix::zeros(self.theta.rows(), 1),
            beta: Matrix::zeros(self.beta.rows(), 1),
            a: Matrix::zeros(self.a.rows(), 1),
        }
    }

    pub fn tensors(&self) -> [&Matrix; 3] {
        [&self.theta, &self.beta, &self.a]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.theta, &mut self.beta, &mut self.a]
    }
}

/// `σ(a_e (θ_s − β_e))`.
pub fn irt_predict(p: &IrtParams, s: usize, e: usize) -> f64 {
    sigmoid(p.a.get(e, 0) * (p.theta.get(s, 0) - p.beta.get(e, 0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MirtParams {
    /// N×K ability.
    pub theta: Matrix,
    /// M×K fixed concept directions, the Q-matrix rows.
    pub q_dir: Matrix,
    /// M×1 scalar difficulty.
    pub d: Matrix,
}

impl MirtParams {
    pub fn new(theta: Matrix, q_dir: Matrix, d: Vec<f64>) -> Result<Self> {
        if theta.cols() != q_dir.cols() || q_dir.rows() != d.len() {
            return Err(Error::Shape(format!(
                "theta {:?}, q_dir {:?}, {} difficulties",
                theta.shape(),
                q_dir.shape(),
                d.len()
            )));
        }
        Ok(MirtParams {
            theta,
            q_dir,
            d: column(d)?,
        })
    }

    pub fn init(n_students: usize, q: &QMatrix, rng: &mut Rng) -> Self {
        MirtParams {
            theta: normal_matrix(n_students, q.n_concepts(), rng),
            q_dir: q.to_dense(),
            d: normal_matrix(q.n_exercises(), 1, rng),
        }
    }

    pub fn n_students(&self) -> usize {
        self.theta.rows()
    }

    pub fn n_exercises(&self) -> usize {
        self.q_dir.rows()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `σ(Q_e · θ_s − d_e)`.
pub fn mirt_predict(p: &MirtParams, s: usize, e: usize) -> f64 {
    sigmoid(dot(p.q_dir.row(e), p.theta.row(s)) - p.d.get(e, 0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfParams {
    /// N×F.
    pub user: Matrix,
    /// M×F.
    pub item: Matrix,
    /// Pass the dot product through a sigmoid.
    pub sigmoid: bool,
}

impl MfParams {
    pub fn new(user: Matrix, item: Matrix, sigmoid: bool) -> Result<Self> {
        if user.cols() != item.cols() {
            return Err(Error::Shape(format!(
                "user {:?} vs item {:?}",
                user.shape(),
                item.shape()
            )));
        }
        Ok(MfParams { user, item, sigmoid })
    }

    pub fn init(n_students: usize, n_exercises: usize, factors: usize, rng: &mut Rng) -> Self {
        MfParams {
            user: normal_matrix(n_students, factors, rng),
            item: normal_matrix(n_exercises, factors, rng),
            sigmoid: true,
        }
    }

    pub fn factors(&self) -> usize {
        self.user.cols()
    }

    pub fn n_students(&self) -> usize {
        self.user.rows()
    }

    pub fn n_exercises(&self) -> usize {
        self.item.rows()
    }
}

/// `user_s · item_e`, or its sigmoid in probability mode.
pub fn mf_predict(p: &MfParams, s: usize, e: usize) -> f64 {
    let raw = dot(p.user.row(s), p.item.row(e));
    if p.sigmoid {
        sigmoid(raw)
    } else {
        raw
    }
}

impl Model for IrtParams {
    type Grad = IrtParams;

    fn n_students(&self) -> usize {
        self.theta.rows()
    }

    fn n_exercises(&self) -> usize {
        self.beta.rows()
    }

    fn new_grad(&self) -> IrtParams {
        self.zeros_like()
    }

    fn batch_gradient(&self, batch: &[ResponseLog], _n_train: usize, g: &mut IrtParams) -> f64 {
        zero_all(&mut g.tensors_mut());
        let mut loss = 0.0;
        for l in batch {
            let (s, e) = (l.student, l.exercise);
            let y = irt_predict(self, s, e);
            loss += cross_entropy(y, l.score);
            let dz = y - l.score;
            let (a, gap) = (self.a.get(e, 0), self.theta.get(s, 0) - self.beta.get(e, 0));
            g.theta.set(s, 0, g.theta.get(s, 0) + dz * a);
            g.beta.set(e, 0, g.beta.get(e, 0) - dz * a);
            g.a.set(e, 0, g.a.get(e, 0) + dz * gap);
        }
        loss
    }

    fn apply(&mut self, adam: &mut Adam, g: &IrtParams) -> Result<()> {
        adam.step(&mut self.tensors_mut(), &g.tensors())?;
        for v in self.a.as_mut_slice() {
            *v = v.max(IRT_MIN_DISCRIMINATION);
        }
        Ok(())
    }

    fn predict_one(&self, s: usize, e: usize) -> f64 {
        irt_predict(self, s, e)
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }
}

#[derive(Clone, Debug)]
pub struct MirtGrad {
    pub theta: Matrix,
    pub d: Matrix,
}

impl Model for MirtParams {
    type Grad = MirtGrad;

    fn n_students(&self) -> usize {
        self.theta.rows()
    }

    fn n_exercises(&self) -> usize {
        self.q_dir.rows()
    }

    fn new_grad(&self) -> MirtGrad {
        MirtGrad {
            theta: Matrix::zeros(self.theta.rows(), self.theta.cols()),
            d: Matrix::zeros(self.d.rows(), 1),
        }
    }

    fn batch_gradient(&self, batch: &[ResponseLog], _n_train: usize, g: &mut MirtGrad) -> f64 {
        zero_all(&mut [&mut g.theta, &mut g.d]);
        let mut loss = 0.0;
        for l in batch {
            let (s, e) = (l.student, l.exercise);
            let y = mirt_predict(self, s, e);
            loss += cross_entropy(y, l.score);
            let dz = y - l.score;
            for (gt, q) in g.theta.row_mut(s).iter_mut().zip(self.q_dir.row(e)) {
                *gt += dz * q;
            }
            g.d.set(e, 0, g.d.get(e, 0) - dz);
        }
        loss
    }

    fn apply(&mut self, adam: &mut Adam, g: &MirtGrad) -> Result<()> {
        adam.step(&mut [&mut self.theta, &mut self.d], &[&g.theta, &g.d])
    }

    fn predict_one(&self, s: usize, e: usize) -> f64 {
        mirt_predict(self, s, e)
    }

    fn is_finite(&self) -> bool {
        self.theta.all_finite() && self.d.all_finite()
    }
}

impl Model for MfParams {
    type Grad = MfParams;

    fn n_students(&self) -> usize {
        self.user.rows()
    }

    fn n_exercises(&self) -> usize {
        self.item.rows()
    }

    fn new_grad(&self) -> MfParams {
        MfParams {
            user: Matrix::zeros(self.user.rows(), self.user.cols()),
            item: Matrix::zeros(self.item.rows(), self.item.cols()),
            sigmoid: self.sigmoid,
        }
    }

    /// Cross-entropy on the sigmoid output; the model is fitted in
    /// probability mode regardless of the flag.
    fn batch_gradient(&self, batch: &[ResponseLog], _n_train: usize, g: &mut MfParams) -> f64 {
        zero_all(&mut [&mut g.user, &mut g.item]);
        let mut loss = 0.0;
        for l in batch {
            let (s, e) = (l.student, l.exercise);
            let y = sigmoid(dot(self.user.row(s), self.item.row(e)));
            loss += cross_entropy(y, l.score);
            let dz = y - l.score;
            for (gu, it) in g.user.row_mut(s).iter_mut().zip(self.item.row(e)) {
                *gu += dz * it;
            }
            for (gi, us) in g.item.row_mut(e).iter_mut().zip(self.user.row(s)) {
                *gi += dz * us;
            }
        }
        loss
    }

    fn apply(&mut self, adam: &mut Adam, g: &MfParams) -> Result<()> {
        adam.step(&mut [&mut self.user, &mut self.item], &[&g.user, &g.item])
    }

    fn predict_one(&self, s: usize, e: usize) -> f64 {
        sigmoid(dot(self.user.row(s), self.item.row(e)))
    }

    fn is_finite(&self) -> bool {
        self.user.all_finite() && self.item.all_finite()
    }
}

fn init_rng(cfg: &TrainConfig) -> Rng {
    Rng::new(cfg.seed).fork(STREAM_INIT)
}

pub fn train_irt(ds: &SplitDataset, cfg: &TrainConfig) -> Result<(IrtParams, History)> {
    let model = IrtParams::init(ds.n_students, ds.n_exercises, &mut init_rng(cfg));
    trainer::fit(model, &ds.train, cfg)
}

pub fn train_mirt(ds: &SplitDataset, q: &QMatrix, cfg: &TrainConfig) -> Result<(MirtParams, History)> {
    if q.n_exercises() != ds.n_exercises {
        return Err(Error::Shape(format!(
            "Q-matrix has {} exercises, dataset {}",
            q.n_exercises(),
            ds.n_exercises
        )));
    }
    let model = MirtParams::init(ds.n_students, q, &mut init_rng(cfg));
    trainer::fit(model, &ds.train, cfg)
}

/// Fits MF in probability mode with `factors` latent dimensions.
pub fn train_mf(ds: &SplitDataset, factors: usize, cfg: &TrainConfig) -> Result<(MfParams, History)> {
    if factors == 0 {
        return Err(Error::config("MF needs at least one latent factor"));
    }
    let model = MfParams::init(ds.n_students, ds.n_exercises, factors, &mut init_rng(cfg));
    trainer::fit(model, &ds.train, cfg)
}

/// How stored embeddings become factor values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Embedding {
    /// `h = σ(embedding)`, the NeuralCDM form.
    Sigmoid,
    /// `h = embedding`, used when target values fall outside (0, 1).
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape(format!(
                "weight {:?} vs bias {}",
                weight.shape(),
                bias.len()
            )));
        }
        Ok(DenseLayer {
            weight,
            bias,
            activation,
        })
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.weight.matvec(input);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
            if self.activation == Activation::Sigmoid {
                *o = sigmoid(*o);
            }
        }
        out
    }
}

/// Factor interaction followed by dense layers ending in one output.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameworkNet {
    pub embedding: Embedding,
    /// N×K student embeddings.
    pub student: Matrix,
    /// M×K difficulty embeddings.
    pub difficulty: Matrix,
    /// M×1 discrimination embeddings.
    pub discrimination: Matrix,
    /// M×K relevancy rows `Q_e`, used as given.
    pub relevancy: Matrix,
    pub layers: Vec<DenseLayer>,
}

impl FrameworkNet {
    pub fn new(
        embedding: Embedding,
        student: Matrix,
        difficulty: Matrix,
        discrimination: Matrix,
        relevancy: Matrix,
        layers: Vec<DenseLayer>,
    ) -> Result<Self> {
        let k = student.cols();
        let m = difficulty.rows();
        if difficulty.cols() != k || relevancy.shape() != (m, k) || discrimination.shape() != (m, 1) {
            return Err(Error::Shape("framework embeddings disagree on M or K".into()));
        }
        let mut width = k;
        for layer in &layers {
            if layer.weight.cols() != width {
                return Err(Error::Shape(format!(
                    "layer expects {} inputs, previous width is {width}",
                    layer.weight.cols()
                )));
            }
            width = layer.weight.rows();
        }
        if width != 1 {
            return Err(Error::Shape(format!("framework output width is {width}, expected 1")));
        }
        Ok(FrameworkNet {
            embedding,
            student,
            difficulty,
            discrimination,
            relevancy,
            layers,
        })
    }

    fn factor(&self, v: f64) -> f64 {
        match self.embedding {
            Embedding::Sigmoid => sigmoid(v),
            Embedding::Raw => v,
        }
    }

    /// `x = Q_e ∘ (h^s − h^diff) · h^disc`.
    pub fn interaction(&self, s: usize, e: usize) -> Vec<f64> {
        let disc = self.factor(self.discrimination.get(e, 0));
        self.relevancy
            .row(e)
            .iter()
            .zip(self.student.row(s).iter().zip(self.difficulty.row(e)))
            .map(|(q, (hs, hd))| q * (self.factor(*hs) - self.factor(*hd)) * disc)
            .collect()
    }

    pub fn predict(&self, s: usize, e: usize) -> f64 {
        let mut v = self.interaction(s, e);
        for layer in &self.layers {
            v = layer.forward(&v);
        }
        v[0]
    }
}

fn output_layer(activation: Activation) -> DenseLayer {
    DenseLayer {
        weight: Matrix::filled(1, 1, 1.0),
        bias: vec![0.0],
        activation,
    }
}

fn summing_layer(width: usize, activation: Activation) -> DenseLayer {
    DenseLayer {
        weight: Matrix::filled(1, width, 1.0),
        bias: vec![0.0],
        activation,
    }
}

/// IRT as a one-concept framework net: `Q_e = 1`, `h^s = θ`, `h^diff = β`,
/// `h^disc = a`, output `σ(x)`. Embeddings are logits of the IRT values when
/// all of them lie in (0, 1); otherwise the raw embedding mode is used.
pub fn reduce_framework_to_irt(irt: &IrtParams) -> Result<FrameworkNet> {
    let in_unit = irt
        .tensors()
        .iter()
        .all(|t| t.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    let (embedding, pre): (Embedding, fn(f64) -> f64) = if in_unit {
        (Embedding::Sigmoid, logit)
    } else {
        (Embedding::Raw, |v| v)
    };
    FrameworkNet::new(
        embedding,
        irt.theta.map(pre),
        irt.beta.map(pre),
        irt.a.map(pre),
        Matrix::filled(irt.n_exercises(), 1, 1.0),
        vec![output_layer(Activation::Sigmoid)],
    )
}

/// MIRT with `h^disc ≡ 1` and `h^diff_e = d_e / |Q_e|` on labelled concepts,
/// so `Q_e · h^diff = d_e`; an all-ones identity layer gives
/// `f1 = Q_e · h^s − d_e` and the output is `σ(f1)`. Requires binary
/// `q_dir` rows; an exercise without concepts must have `d_e = 0`.
pub fn reduce_framework_to_mirt(m: &MirtParams) -> Result<FrameworkNet> {
    let (n_ex, k) = m.q_dir.shape();
    let mut difficulty = Matrix::zeros(n_ex, k);
    for e in 0..n_ex {
        let row = m.q_dir.row(e);
        if row.iter().any(|&q| q != 0.0 && q != 1.0) {
            return Err(Error::data(format!("exercise {e} has a non-binary concept direction")));
        }
        let count = row.iter().filter(|&&q| q == 1.0).count();
        let d = m.d.get(e, 0);
        if count == 0 {
            if d != 0.0 {
                return Err(Error::data(format!(
                    "exercise {e} has no concepts but difficulty {d}; Q_e · h^diff cannot match it"
                )));
            }
            continue;
        }
        for (j, &v) in row.iter().enumerate() {
            if v == 1.0 {
                difficulty.set(e, j, d / count as f64);
            }
        }
    }
    FrameworkNet::new(
        Embedding::Raw,
        m.theta.clone(),
        difficulty,
        Matrix::filled(n_ex, 1, 1.0),
        m.q_dir.clone(),
        vec![
            summing_layer(k, Activation::Identity),
            output_layer(Activation::Sigmoid),
        ],
    )
}

/// MF with `h^diff ≡ 0`, `h^disc ≡ 1`, `Q_e = item_e`, `h^s = user_s`: the
/// interaction is `item_e ∘ user_s` and an all-ones layer sums it.
pub fn reduce_framework_to_mf(mf: &MfParams) -> Result<FrameworkNet> {
    let (n_ex, f) = mf.item.shape();
    let mut layers = vec![summing_layer(f, Activation::Identity)];
    if mf.sigmoid {
        layers.push(output_layer(Activation::Sigmoid));
    }
    FrameworkNet::new(
        Embedding::Raw,
        mf.user.clone(),
        Matrix::zeros(n_ex, f),
        Matrix::filled(n_ex, 1, 1.0),
        mf.item.clone(),
        layers,
    )
}
