//! NeuralCDM: sigmoid factor embeddings for students and exercises, a
//! Q-masked first interaction layer and three monotone dense layers.
//!
//! Per (student s, exercise e) with relevancy row `q`:
//!
//! ```text
//! h_s    = σ(A[s])            h_diff = σ(B[e])          h_disc = σ(D[e])
//! x      = q ∘ (h_s − h_diff) · h_disc
//! f1     = σ(W1 x + b1)       f2 = σ(W2 f1 + b2)         y = σ(W3 f2 + b3)
//! ```
//!
//! Keeping `W1`, `W2`, `W3` non-negative makes `y` non-decreasing in every
//! entry of `h_s`; [`clamp_positive`] restores that after each optimizer step.

use std::io;

use crate::dataset::{IdMaps, QMatrix, ResponseLog, SplitDataset};
use crate::error::{Error, Result};
use crate::numeric::{sigmoid, xavier_init, Adam, Matrix, Rng};
use crate::trainer::{self, cross_entropy, History, Model, TrainConfig, STREAM_INIT};

/// Every trainable tensor. Biases are stored as column matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// N×K student embedding.
    pub a: Matrix,
    /// M×K knowledge-difficulty embedding.
    pub b: Matrix,
    /// M×1 discrimination embedding.
    pub d: Matrix,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

pub const TENSOR_NAMES: [&str; 9] = ["A", "B", "D", "W1", "b1", "W2", "b2", "W3", "b3"];

impl ModelParams {
    /// Xavier-normal weights and embeddings, zero biases.
    pub fn init(n_students: usize, n_exercises: usize, n_concepts: usize, h1: usize, h2: usize, rng: &mut Rng) -> Self {
        ModelParams {
            a: xavier_init(n_concepts, n_students, rng),
            b: xavier_init(n_concepts, n_exercises, rng),
            d: xavier_init(1, n_exercises, rng),
            w1: xavier_init(n_concepts, h1, rng),
            b1: Matrix::zeros(h1, 1),
            w2: xavier_init(h1, h2, rng),
            b2: Matrix::zeros(h2, 1),
            w3: xavier_init(h2, 1, rng),
            b3: Matrix::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        ModelParams {
            a: z(&self.a),
            b: z(&self.b),
            d: z(&self.d),
            w1: z(&self.w1),
            b1: z(&self.b1),
            w2: z(&self.w2),
            b2: z(&self.b2),
            w3: z(&self.w3),
            b3: z(&self.b3),
        }
    }

    pub fn n_students(&self) -> usize {
        self.a.rows()
    }

    pub fn n_exercises(&self) -> usize {
        self.b.rows()
    }

    pub fn n_concepts(&self) -> usize {
        self.a.cols()
    }

    pub fn h1(&self) -> usize {
        self.w1.rows()
    }

    pub fn h2(&self) -> usize {
        self.w2.rows()
    }

    pub fn tensors(&self) -> [&Matrix; 9] {
        [
            &self.a, &self.b, &self.d, &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 9] {
        [
            &mut self.a,
            &mut self.b,
            &mut self.d,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    pub fn named_tensors(&self) -> Vec<(&'static str, &Matrix)> {
        TENSOR_NAMES.iter().copied().zip(self.tensors()).collect()
    }

    /// Rebuilds parameters from tensors in [`TENSOR_NAMES`] order, checking
    /// that the shapes fit together.
    pub fn from_tensors(mut tensors: Vec<Matrix>) -> Result<Self> {
        if tensors.len() != 9 {
            return Err(Error::Shape(format!("expected 9 tensors, got {}", tensors.len())));
        }
        let mut take = || tensors.remove(0);
        let p = ModelParams {
            a: take(),
            b: take(),
            d: take(),
            w1: take(),
            b1: take(),
            w2: take(),
            b2: take(),
            w3: take(),
            b3: take(),
        };
        let (n, k, m, h1, h2) = (p.a.rows(), p.a.cols(), p.b.rows(), p.w1.rows(), p.w2.rows());
        let expected = [
            (n, k),
            (m, k),
            (m, 1),
            (h1, k),
            (h1, 1),
            (h2, h1),
            (h2, 1),
            (1, h2),
            (1, 1),
        ];
        for ((name, t), shape) in p.named_tensors().into_iter().zip(expected) {
            if t.shape() != shape {
                return Err(Error::Shape(format!("{name} is {:?}, expected {shape:?}", t.shape())));
            }
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    /// True when every interaction weight is non-negative.
    pub fn is_monotone(&self) -> bool {
        [&self.w1, &self.w2, &self.w3]
            .iter()
            .all(|w| w.as_slice().iter().all(|&x| x >= 0.0))
    }

    fn check_sample(&self, student: usize, exercise: usize, q_row: &[f64]) -> Result<()> {
        if student >= self.n_students() {
            return Err(Error::Index {
                kind: "student",
                index: student,
                len: self.n_students(),
            });
        }
        if exercise >= self.n_exercises() {
            return Err(Error::Index {
                kind: "exercise",
                index: exercise,
                len: self.n_exercises(),
            });
        }
        if q_row.len() != self.n_concepts() {
            return Err(Error::Shape(format!(
                "q row has {} entries, model has {} concepts",
                q_row.len(),
                self.n_concepts()
            )));
        }
        Ok(())
    }
}

/// Activations kept from [`forward`] for [`backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    pub student: usize,
    pub exercise: usize,
    pub q_row: Vec<f64>,
    pub h_s: Vec<f64>,
    pub h_diff: Vec<f64>,
    pub h_disc: f64,
    pub x: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub y: f64,
}

fn dense_sigmoid(w: &Matrix, bias: &Matrix, input: &[f64]) -> Vec<f64> {
    let mut out = w.matvec(input);
    for (o, b) in out.iter_mut().zip(bias.as_slice()) {
        *o = sigmoid(*o + b);
    }
    out
}

/// Prediction for one response, plus the activations `backward` needs.
pub fn forward(params: &ModelParams, student: usize, exercise: usize, q_row: &[f64]) -> Result<(f64, ForwardCache)> {
    params.check_sample(student, exercise, q_row)?;
    let cache = forward_unchecked(params, student, exercise, q_row);
    Ok((cache.y, cache))
}

pub(crate) fn forward_unchecked(params: &ModelParams, student: usize, exercise: usize, q_row: &[f64]) -> ForwardCache {
    let h_s: Vec<f64> = params.a.row(student).iter().map(|&v| sigmoid(v)).collect();
    let h_diff: Vec<f64> = params.b.row(exercise).iter().map(|&v| sigmoid(v)).collect();
    let h_disc = sigmoid(params.d.get(exercise, 0));
    let x: Vec<f64> = q_row
        .iter()
        .zip(h_s.iter().zip(&h_diff))
        .map(|(q, (s, d))| q * (s - d) * h_disc)
        .collect();
    let f1 = dense_sigmoid(&params.w1, &params.b1, &x);
    let f2 = dense_sigmoid(&params.w2, &params.b2, &f1);
    let y = dense_sigmoid(&params.w3, &params.b3, &f2)[0];
    ForwardCache {
        student,
        exercise,
        q_row: q_row.to_vec(),
        h_s,
        h_diff,
        h_disc,
        x,
        f1,
        f2,
        y,
    }
}

/// Accumulates into `grad` the gradient of `cross_entropy(y, r)` for the
/// cached sample and returns its gradient with respect to the q row.
///
/// The output-layer error is `y − r` (the clip inside the loss is ignored).
pub fn backward(params: &ModelParams, cache: &ForwardCache, r: f64, grad: &mut ModelParams) -> Vec<f64> {
    let delta3 = cache.y - r;
    grad.w3.add_outer(&[delta3], &cache.f2);
    grad.b3.as_mut_slice()[0] += delta3;

    let delta2: Vec<f64> = params
        .w3
        .t_matvec(&[delta3])
        .into_iter()
        .zip(&cache.f2)
        .map(|(g, f)| g * f * (1.0 - f))
        .collect();
    grad.w2.add_outer(&delta2, &cache.f1);
    for (b, d) in grad.b2.as_mut_slice().iter_mut().zip(&delta2) {
        *b += d;
    }

    let delta1: Vec<f64> = params
        .w2
        .t_matvec(&delta2)
        .into_iter()
        .zip(&cache.f1)
        .map(|(g, f)| g * f * (1.0 - f))
        .collect();
    grad.w1.add_outer(&delta1, &cache.x);
    for (b, d) in grad.b1.as_mut_slice().iter_mut().zip(&delta1) {
        *b += d;
    }

    let dx = params.w1.t_matvec(&delta1);
    let disc = cache.h_disc;
    let mut d_disc = 0.0;
    let mut dq = Vec::with_capacity(dx.len());
    let a_row = grad.a.row_mut(cache.student);
    for k in 0..dx.len() {
        let gap = cache.h_s[k] - cache.h_diff[k];
        let q = cache.q_row[k];
        let hs = cache.h_s[k];
        a_row[k] += dx[k] * q * disc * hs * (1.0 - hs);
        d_disc += dx[k] * q * gap;
        dq.push(dx[k] * gap * disc);
    }
    let b_row = grad.b.row_mut(cache.exercise);
    for k in 0..dx.len() {
        let hd = cache.h_diff[k];
        b_row[k] -= dx[k] * cache.q_row[k] * disc * hd * (1.0 - hd);
    }
    grad.d.row_mut(cache.exercise)[0] += d_disc * disc * (1.0 - disc);
    dq
}

/// Projects `W1`, `W2`, `W3` onto the non-negative orthant.
pub fn clamp_positive(params: &mut ModelParams) {
    for w in [&mut params.w1, &mut params.w2, &mut params.w3] {
        for v in w.as_mut_slice() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub student: usize,
    pub exercise: usize,
    pub q_row: &'a [f64],
    pub r: f64,
}

/// Summed cross-entropy of a batch.
pub fn loss_batch(params: &ModelParams, batch: &[Sample<'_>]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::data("empty batch"));
    }
    let mut total = 0.0;
    for s in batch {
        let (y, _) = forward(params, s.student, s.exercise, s.q_row)?;
        total += cross_entropy(y, s.r);
    }
    Ok(total)
}

/// Probabilities for `logs`, reading each exercise's relevancy row from `q_rows` (M×K).
pub fn predict(params: &ModelParams, logs: &[ResponseLog], q_rows: &Matrix) -> Result<Vec<f64>> {
    if q_rows.shape() != (params.n_exercises(), params.n_concepts()) {
        return Err(Error::Shape(format!(
            "relevancy matrix {:?} vs model {}x{}",
            q_rows.shape(),
            params.n_exercises(),
            params.n_concepts()
        )));
    }
    logs.iter()
        .map(|l| forward(params, l.student, l.exercise, q_rows.row(l.exercise)).map(|(y, _)| y))
        .collect()
}

/// NeuralCDM bound to a fixed relevancy matrix, as trained by [`train`].
#[derive(Clone, Debug)]
pub struct NeuralCdm {
    pub params: ModelParams,
    /// M×K relevancy rows fed to the first layer.
    pub q: Matrix,
    /// Apply [`clamp_positive`] after every step.
    pub monotone: bool,
}

impl Model for NeuralCdm {
    type Grad = ModelParams;

    fn n_students(&self) -> usize {
        self.params.n_students()
    }

    fn n_exercises(&self) -> usize {
        self.params.n_exercises()
    }

    fn new_grad(&self) -> ModelParams {
        self.params.zeros_like()
    }

    fn batch_gradient(&self, batch: &[ResponseLog], _n_train: usize, grad: &mut ModelParams) -> f64 {
        for t in grad.tensors_mut() {
            t.fill(0.0);
        }
        let mut loss = 0.0;
        for log in batch {
            let cache = forward_unchecked(&self.params, log.student, log.exercise, self.q.row(log.exercise));
            loss += cross_entropy(cache.y, log.score);
            backward(&self.params, &cache, log.score, grad);
        }
        loss
    }

    fn apply(&mut self, adam: &mut Adam, grad: &ModelParams) -> Result<()> {
        adam.step(&mut self.params.tensors_mut(), &grad.tensors())?;
        if self.monotone {
            clamp_positive(&mut self.params);
        }
        Ok(())
    }

    fn predict_one(&self, student: usize, exercise: usize) -> f64 {
        forward_unchecked(&self.params, student, exercise, self.q.row(exercise)).y
    }

    fn is_finite(&self) -> bool {
        self.params.is_finite()
    }
}

fn check_split(ds: &SplitDataset, q: &QMatrix) -> Result<()> {
    if q.n_exercises() != ds.n_exercises {
        return Err(Error::Shape(format!(
            "Q-matrix has {} exercises, dataset {}",
            q.n_exercises(),
            ds.n_exercises
        )));
    }
    Ok(())
}

/// Initial NeuralCDM parameters for a dataset, seeded from `cfg.seed`.
pub fn init_params(n_students: usize, n_exercises: usize, n_concepts: usize, cfg: &TrainConfig) -> ModelParams {
    let mut rng = Rng::new(cfg.seed).fork(STREAM_INIT);
    ModelParams::init(n_students, n_exercises, n_concepts, cfg.h1, cfg.h2, &mut rng)
}

/// Trains NeuralCDM on the training side of `ds` with the binary Q-matrix.
pub fn train(ds: &SplitDataset, q: &QMatrix, cfg: &TrainConfig) -> Result<(ModelParams, History)> {
    train_with(ds, q, cfg, true)
}

/// Same as [`train`] without the non-negativity projection (ablation).
pub fn train_unconstrained(ds: &SplitDataset, q: &QMatrix, cfg: &TrainConfig) -> Result<(ModelParams, History)> {
    train_with(ds, q, cfg, false)
}

fn train_with(ds: &SplitDataset, q: &QMatrix, cfg: &TrainConfig, monotone: bool) -> Result<(ModelParams, History)> {
    cfg.validate()?;
    check_split(ds, q)?;
    let model = NeuralCdm {
        params: init_params(ds.n_students, ds.n_exercises, q.n_concepts(), cfg),
        q: q.to_dense(),
        monotone,
    };
    let (model, history) = trainer::fit(model, &ds.train, cfg)?;
    Ok((model.params, history))
}

/// Diagnosis read off trained parameters: every value is a sigmoid of an embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosisReport {
    /// N×K, row s is `σ(A[s])`.
    pub proficiency: Matrix,
    /// M×K, row e is `σ(B[e])`.
    pub knowledge_difficulty: Matrix,
    /// M×1, `σ(D[e])`.
    pub discrimination: Matrix,
}

pub fn diagnose(params: &ModelParams) -> DiagnosisReport {
    DiagnosisReport {
        proficiency: params.a.sigmoid(),
        knowledge_difficulty: params.b.sigmoid(),
        discrimination: params.d.sigmoid(),
    }
}

fn name(map: &crate::dataset::IdMap, i: usize) -> String {
    map.name(i).map_or_else(|| i.to_string(), str::to_owned)
}

impl DiagnosisReport {
    /// `student_id,concept_id,proficiency` for the given students.
    pub fn write_proficiency<W: io::Write>(&self, w: W, ids: &IdMaps, students: &[usize]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["student_id", "concept_id", "proficiency"])?;
        for &s in students {
            for k in 0..self.proficiency.cols() {
                out.write_record([
                    name(&ids.students, s),
                    name(&ids.concepts, k),
                    format!("{:.17e}", self.proficiency.get(s, k)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `exercise_id,concept_id,knowledge_difficulty` for the given exercises.
    pub fn write_knowledge_difficulty<W: io::Write>(&self, w: W, ids: &IdMaps, exercises: &[usize]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["exercise_id", "concept_id", "knowledge_difficulty"])?;
        for &e in exercises {
            for k in 0..self.knowledge_difficulty.cols() {
                out.write_record([
                    name(&ids.exercises, e),
                    name(&ids.concepts, k),
                    format!("{:.17e}", self.knowledge_difficulty.get(e, k)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `exercise_id,discrimination` for the given exercises.
    pub fn write_discrimination<W: io::Write>(&self, w: W, ids: &IdMaps, exercises: &[usize]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["exercise_id", "discrimination"])?;
        for &e in exercises {
            out.write_record([
                name(&ids.exercises, e),
                format!("{:.17e}", self.discrimination.get(e, 0)),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_grad, relative_error};

    fn small(seed: u64, k: usize) -> ModelParams {
        let mut rng = Rng::new(seed);
        let mut p = ModelParams::init(3, 4, k, 8, 4, &mut rng);
        // non-zero biases so their gradients are exercised
        for b in [&mut p.b1, &mut p.b2, &mut p.b3] {
            for v in b.as_mut_slice() {
                *v = rng.normal(0.0, 0.5);
            }
        }
        // larger embeddings than Xavier gives so sigmoids leave 0.5
        for e in [&mut p.a, &mut p.b, &mut p.d] {
            for v in e.as_mut_slice() {
                *v = rng.normal(0.0, 1.5);
            }
        }
        p
    }

    #[test]
    fn forward_zero_gap_ignores_q_and_d() {
        let mut p = small(1, 3);
        let row = p.a.row(0).to_vec();
        p.b.row_mut(2).copy_from_slice(&row);
        let (y1, c) = forward(&p, 0, 2, &[1.0, 0.0, 1.0]).unwrap();
        assert!(c.x.iter().all(|&v| v == 0.0));
        p.d.set(2, 0, 7.0);
        let (y2, _) = forward(&p, 0, 2, &[0.3, 1.0, 0.0]).unwrap();
        assert_eq!(y1, y2);
        let f1: Vec<f64> = p.b1.as_slice().iter().map(|&b| sigmoid(b)).collect();
        let f2 = dense_sigmoid(&p.w2, &p.b2, &f1);
        let expected = dense_sigmoid(&p.w3, &p.b3, &f2)[0];
        assert!((y1 - expected).abs() < 1e-15);
    }

    #[test]
    fn forward_first_layer_arithmetic() {
        let mut p = ModelParams::init(1, 1, 2, 2, 2, &mut Rng::new(0));
        let logit = crate::numeric::logit;
        p.a.row_mut(0).copy_from_slice(&[logit(0.8), logit(0.3)]);
        p.b.row_mut(0).copy_from_slice(&[logit(0.5), logit(0.9)]);
        p.d.set(0, 0, 0.0);
        let (_, c) = forward(&p, 0, 0, &[1.0, 0.0]).unwrap();
        assert!((c.x[0] - 0.15).abs() < 1e-12);
        assert_eq!(c.x[1], 0.0);
    }

    #[test]
    fn forward_rejects_bad_indices() {
        let p = small(2, 2);
        assert!(matches!(
            forward(&p, 3, 0, &[1.0, 0.0]),
            Err(Error::Index { kind: "student", .. })
        ));
        assert!(matches!(
            forward(&p, 0, 4, &[1.0, 0.0]),
            Err(Error::Index { kind: "exercise", .. })
        ));
        assert!(matches!(forward(&p, 0, 0, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn loss_examples() {
        let mut p = small(3, 2);
        // force y = 0.5: zero output weights and bias
        p.w3.fill(0.0);
        p.b3.fill(0.0);
        let q = [1.0, 1.0];
        let s = |r| Sample {
            student: 0,
            exercise: 0,
            q_row: &q,
            r,
        };
        let ln2 = std::f64::consts::LN_2;
        assert!((loss_batch(&p, &[s(1.0)]).unwrap() - ln2).abs() < 1e-12);
        assert!((loss_batch(&p, &[s(1.0), s(0.0)]).unwrap() - 2.0 * ln2).abs() < 1e-12);
        p.b3.fill(40.0);
        assert!(loss_batch(&p, &[s(1.0)]).unwrap() < 1e-8);
        assert!(loss_batch(&p, &[]).is_err());
    }

    #[test]
    fn output_error_is_y_minus_r() {
        let p = small(4, 2);
        let (y, c) = forward(&p, 1, 1, &[1.0, 1.0]).unwrap();
        let mut g = p.zeros_like();
        backward(&p, &c, 1.0, &mut g);
        assert!((g.b3.get(0, 0) - (y - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_q_entry_blocks_student_gradient() {
        let p = small(5, 3);
        let (_, c) = forward(&p, 2, 1, &[1.0, 0.0, 1.0]).unwrap();
        let mut g = p.zeros_like();
        backward(&p, &c, 0.0, &mut g);
        assert_eq!(g.a.get(2, 1), 0.0);
        assert_ne!(g.a.get(2, 0), 0.0);
        assert_eq!(g.b.get(1, 1), 0.0);
    }

    /// Analytic vs. central differences for every tensor and the q row.
    fn check_gradients(seed: u64, k: usize) {
        let p = small(seed, k);
        let mut rng = Rng::new(seed + 100);
        let q_row: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
        let (s, e, r) = (1, 2, (seed % 2) as f64);

        let (_, cache) = forward(&p, s, e, &q_row).unwrap();
        let mut grad = p.zeros_like();
        let dq = backward(&p, &cache, r, &mut grad);

        for t in 0..9 {
            let at = p.tensors()[t].as_slice().to_vec();
            let numeric = finite_diff_grad(
                |x| {
                    let mut pp = p.clone();
                    pp.tensors_mut()[t].as_mut_slice().copy_from_slice(x);
                    cross_entropy(forward(&pp, s, e, &q_row).unwrap().0, r)
                },
                &at,
                1e-5,
            )
            .unwrap();
            for (i, (&a, &n)) in grad.tensors()[t].as_slice().iter().zip(&numeric).enumerate() {
                assert!(
                    relative_error(a, n) <= 1e-4,
                    "{} [{i}]: analytic {a} numeric {n}",
                    TENSOR_NAMES[t]
                );
            }
        }
        let numeric = finite_diff_grad(|x| cross_entropy(forward(&p, s, e, x).unwrap().0, r), &q_row, 1e-5).unwrap();
        for (&a, &n) in dq.iter().zip(&numeric) {
            assert!(relative_error(a, n) <= 1e-4, "q: {a} vs {n}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            check_gradients(seed, if seed % 2 == 0 { 2 } else { 5 });
        }
    }

    #[test]
    fn clamp_positive_projection() {
        let mut p = small(6, 3);
        p.w1.set(0, 0, -0.3);
        let before_a = p.a.clone();
        clamp_positive(&mut p);
        assert_eq!(p.w1.get(0, 0), 0.0);
        assert!(p.is_monotone());
        assert_eq!(p.a, before_a);
        let once = p.clone();
        clamp_positive(&mut p);
        assert_eq!(p, once);
    }

    #[test]
    fn output_depends_only_on_rows_used() {
        let p = small(7, 3);
        let mut other = ModelParams::init(5, 6, 3, 8, 4, &mut Rng::new(99));
        for (dst, src) in [
            (&mut other.w1, &p.w1),
            (&mut other.b1, &p.b1),
            (&mut other.w2, &p.w2),
            (&mut other.b2, &p.b2),
            (&mut other.w3, &p.w3),
            (&mut other.b3, &p.b3),
        ] {
            *dst = src.clone();
        }
        other.a.row_mut(4).copy_from_slice(p.a.row(1));
        other.b.row_mut(5).copy_from_slice(p.b.row(3));
        other.d.row_mut(5).copy_from_slice(p.d.row(3));
        let q = [1.0, 0.5, 0.0];
        assert_eq!(forward(&p, 1, 3, &q).unwrap().0, forward(&other, 4, 5, &q).unwrap().0);
    }

    #[test]
    fn diagnose_is_sigmoid_of_embeddings() {
        let mut p = small(8, 2);
        p.a.row_mut(0).fill(0.0);
        let report = diagnose(&p);
        assert_eq!(report.proficiency.row(0), &[0.5, 0.5]);
        for s in 0..p.n_students() {
            for k in 0..2 {
                assert_eq!(report.proficiency.get(s, k), sigmoid(p.a.get(s, k)));
            }
        }
        assert!(report.proficiency.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn predict_matches_forward() {
        let p = small(9, 2);
        let q = QMatrix::from_pairs(4, 2, [(0, 0), (1, 1), (2, 0), (2, 1), (3, 1)]).unwrap();
        let logs = [
            ResponseLog::new(0, 0, 1.0),
            ResponseLog::new(2, 2, 0.0),
            ResponseLog::new(1, 3, 1.0),
        ];
        let dense = q.to_dense();
        let preds = predict(&p, &logs, &dense).unwrap();
        for (log, y) in logs.iter().zip(&preds) {
            assert_eq!(
                *y,
                forward(&p, log.student, log.exercise, &q.dense_row(log.exercise))
                    .unwrap()
                    .0
            );
            assert!(*y > 0.0 && *y < 1.0);
        }
        assert_eq!(preds, predict(&p, &logs, &dense).unwrap());
        assert!(predict(&p, &[ResponseLog::new(9, 0, 1.0)], &dense).is_err());
    }

    #[test]
    fn from_tensors_checks_shapes() {
        let p = small(10, 2);
        let tensors: Vec<Matrix> = p.tensors().iter().map(|&t| t.clone()).collect();
        assert_eq!(ModelParams::from_tensors(tensors.clone()).unwrap(), p);
        let mut bad = tensors;
        bad[5] = Matrix::zeros(3, 3);
        assert!(ModelParams::from_tensors(bad).is_err());
    }
}
