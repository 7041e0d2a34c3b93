//! NeuralCDM+: refining a deficient Q-matrix with candidate concepts.
//!
//! Each exercise gets a set of candidate concepts from an external ranker
//! (read from `exercise_id,concept_id,rank` CSV). A trainable real matrix
//! `q̃` replaces the binary Q-matrix through `σ(q̃) ∘ mask`, where the mask
//! admits labelled and candidate cells. `q̃` has a zero-mean Gaussian prior
//! and a pairwise logistic likelihood that ranks every labelled concept above
//! every unlabelled candidate of the same exercise.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use crate::dataset::{check_header, csv_reader, field, record_line, IdMaps, QMatrix, ResponseLog, SplitDataset};
use crate::error::{Error, Result};
use crate::neuralcdm::{backward, clamp_positive, forward_unchecked, init_params, ModelParams};
use crate::numeric::{log_sigmoid, sigmoid, Adam, Matrix};
use crate::trainer::{self, cross_entropy, History, Model, TrainConfig};

pub const DEFAULT_TOP_K: usize = 20;

/// Per-exercise candidate concepts, in rank order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSets {
    sets: Vec<Vec<usize>>,
    n_concepts: usize,
    k: usize,
}

impl CandidateSets {
    pub fn empty(n_exercises: usize, n_concepts: usize) -> Self {
        CandidateSets {
            sets: vec![Vec::new(); n_exercises],
            n_concepts,
            k: DEFAULT_TOP_K,
        }
    }

    /// Validates bounds, duplicates and the `|V_i| ≤ k` limit.
    pub fn from_sets(sets: Vec<Vec<usize>>, n_concepts: usize, k: usize) -> Result<Self> {
        for (e, set) in sets.iter().enumerate() {
            if set.len() > k {
                return Err(Error::data(format!(
                    "exercise {e} has {} candidates, more than k={k}",
                    set.len()
                )));
            }
            let mut seen = vec![false; n_concepts];
            for &c in set {
                if c >= n_concepts {
                    return Err(Error::Index {
                        kind: "concept",
                        index: c,
                        len: n_concepts,
                    });
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::data(format!("exercise {e} lists candidate {c} twice")));
                }
            }
        }
        Ok(CandidateSets { sets, n_concepts, k })
    }

    pub fn get(&self, exercise: usize) -> &[usize] {
        &self.sets[exercise]
    }

    pub fn n_exercises(&self) -> usize {
        self.sets.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_all_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }
}

/// Reads `exercise_id,concept_id,rank` rows. IDs must already be known; each
/// exercise keeps its `k` best-ranked (lowest rank) distinct concepts.
pub fn read_candidates<R: io::Read>(reader: R, source: &Path, ids: &IdMaps, k: usize) -> Result<CandidateSets> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["exercise_id", "concept_id", "rank"])?;
    let mut ranked: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let parse_err = |message: String| Error::Parse {
            path: source.to_owned(),
            line,
            message,
        };
        let e = field(&rec, 0, source, line)?;
        let c = field(&rec, 1, source, line)?;
        let rank = field(&rec, 2, source, line)?;
        let e = ids
            .exercises
            .get(e)
            .ok_or_else(|| parse_err(format!("unknown exercise `{e}`")))?;
        let c = ids
            .concepts
            .get(c)
            .ok_or_else(|| parse_err(format!("unknown concept `{c}`")))?;
        let rank: f64 = rank
            .parse()
            .map_err(|_| parse_err(format!("rank `{rank}` is not a number")))?;
        ranked.entry(e).or_default().push((rank, c));
    }
    let mut sets = vec![Vec::new(); ids.exercises.len()];
    for (e, mut items) in ranked {
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut set: Vec<usize> = Vec::new();
        for (_, c) in items {
            if !set.contains(&c) && set.len() < k {
                set.push(c);
            }
        }
        sets[e] = set;
    }
    CandidateSets::from_sets(sets, ids.concepts.len(), k)
}

pub fn load_candidates(path: impl AsRef<Path>, ids: &IdMaps, k: usize) -> Result<CandidateSets> {
    let path = path.as_ref();
    read_candidates(std::fs::File::open(path)?, path, ids, k)
}

pub fn write_candidates<W: io::Write>(w: W, cand: &CandidateSets, ids: &IdMaps) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["exercise_id", "concept_id", "rank"])?;
    for e in 0..cand.n_exercises() {
        for (rank, &c) in cand.get(e).iter().enumerate() {
            out.write_record([
                ids.exercises.name(e).unwrap_or_default(),
                ids.concepts.name(c).unwrap_or_default(),
                &(rank + 1).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Triples `(exercise, labelled concept, unlabelled candidate)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialOrderSet {
    pub triples: Vec<(usize, usize, usize)>,
}

impl PartialOrderSet {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

fn check_dims(q: &QMatrix, cand: &CandidateSets) -> Result<()> {
    if q.n_exercises() != cand.n_exercises() || q.n_concepts() != cand.n_concepts() {
        return Err(Error::Shape(format!(
            "Q-matrix {}x{} vs candidates {}x{}",
            q.n_exercises(),
            q.n_concepts(),
            cand.n_exercises(),
            cand.n_concepts()
        )));
    }
    Ok(())
}

/// Every `(i, a, b)` with `Q[i][a] = 1`, `Q[i][b] = 0` and `b ∈ V_i`, in
/// lexicographic order.
pub fn build_partial_orders(q: &QMatrix, cand: &CandidateSets) -> Result<PartialOrderSet> {
    check_dims(q, cand)?;
    let mut triples = Vec::new();
    for i in 0..q.n_exercises() {
        let mut unlabelled: Vec<usize> = cand.get(i).iter().copied().filter(|&b| !q.contains(i, b)).collect();
        unlabelled.sort_unstable();
        for &a in q.concepts(i) {
            triples.extend(unlabelled.iter().map(|&b| (i, a, b)));
        }
    }
    Ok(PartialOrderSet { triples })
}

/// `mask[i][j] = 1` iff `j ∈ V_i` or `Q[i][j] = 1`.
pub fn build_mask(q: &QMatrix, cand: &CandidateSets) -> Result<Matrix> {
    check_dims(q, cand)?;
    let mut mask = q.to_dense();
    for i in 0..q.n_exercises() {
        for &j in cand.get(i) {
            mask.set(i, j, 1.0);
        }
    }
    Ok(mask)
}

/// `ln σ(λ (qa − qb))`, the log-probability that `a` outranks `b`.
pub fn pairwise_logp(qa: f64, qb: f64, lambda: f64) -> f64 {
    log_sigmoid(lambda * (qa - qb))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineConfig {
    /// Sharpness of the pairwise logistic.
    pub lambda: f64,
    /// Prior standard deviation of each `q̃` entry.
    pub sigma: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            lambda: 0.1,
            sigma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedQ {
    pub q_tilde: Matrix,
    pub mask: Matrix,
    pub lambda: f64,
    pub sigma: f64,
}

impl RefinedQ {
    /// Starts at the prior mean, `q̃ = 0`.
    pub fn new(mask: Matrix, cfg: RefineConfig) -> Self {
        RefinedQ {
            q_tilde: Matrix::zeros(mask.rows(), mask.cols()),
            mask,
            lambda: cfg.lambda,
            sigma: cfg.sigma,
        }
    }
}

/// Negative log-posterior of `q̃` given the partial orders, constant dropped.
/// The Gaussian prior covers every entry of `q̃`.
pub fn refine_neg_log_posterior(rq: &RefinedQ, dv: &PartialOrderSet) -> f64 {
    let q = &rq.q_tilde;
    let pairwise: f64 = dv
        .triples
        .iter()
        .map(|&(i, a, b)| pairwise_logp(q.get(i, a), q.get(i, b), rq.lambda))
        .sum();
    let prior: f64 = q.as_slice().iter().map(|v| v * v).sum::<f64>() / (2.0 * rq.sigma * rq.sigma);
    -(pairwise - prior)
}

/// Adds `scale · ∇ refine_neg_log_posterior` to `grad`.
pub fn refine_gradient(rq: &RefinedQ, dv: &PartialOrderSet, scale: f64, grad: &mut Matrix) {
    let q = &rq.q_tilde;
    let inv_var = 1.0 / (rq.sigma * rq.sigma);
    for (g, v) in grad.as_mut_slice().iter_mut().zip(q.as_slice()) {
        *g += scale * v * inv_var;
    }
    for &(i, a, b) in &dv.triples {
        // d/dΔ of −ln σ(λΔ) is −λ (1 − σ(λΔ))
        let coef = -rq.lambda * (1.0 - sigmoid(rq.lambda * (q.get(i, a) - q.get(i, b))));
        grad.set(i, a, grad.get(i, a) + scale * coef);
        grad.set(i, b, grad.get(i, b) - scale * coef);
    }
}

/// `σ(q̃) ∘ mask`.
pub fn effective_q(rq: &RefinedQ) -> Matrix {
    let mut out = rq.q_tilde.sigmoid();
    for (o, m) in out.as_mut_slice().iter_mut().zip(rq.mask.as_slice()) {
        if *m == 0.0 {
            *o = 0.0;
        }
    }
    out
}

/// NeuralCDM whose relevancy rows come from a jointly trained `q̃`.
#[derive(Clone, Debug)]
pub struct NeuralCdmPlus {
    pub params: ModelParams,
    pub refined: RefinedQ,
    pub orders: PartialOrderSet,
    effective: Matrix,
}

#[derive(Clone, Debug)]
pub struct PlusGrad {
    pub params: ModelParams,
    pub q_tilde: Matrix,
}

impl NeuralCdmPlus {
    pub fn new(params: ModelParams, refined: RefinedQ, orders: PartialOrderSet) -> Self {
        let effective = effective_q(&refined);
        NeuralCdmPlus {
            params,
            refined,
            orders,
            effective,
        }
    }

    pub fn effective(&self) -> &Matrix {
        &self.effective
    }

    /// Joint objective `−ln p(q̃ | D_V) · scale + Σ cross-entropy` and its
    /// gradient. Masked-out `q̃` entries receive no gradient.
    pub fn joint_gradient(&self, batch: &[ResponseLog], posterior_scale: f64, grad: &mut PlusGrad) -> f64 {
        for t in grad.params.tensors_mut() {
            t.fill(0.0);
        }
        grad.q_tilde.fill(0.0);
        let mut loss = 0.0;
        for log in batch {
            let cache = forward_unchecked(
                &self.params,
                log.student,
                log.exercise,
                self.effective.row(log.exercise),
            );
            loss += cross_entropy(cache.y, log.score);
            let dq = backward(&self.params, &cache, log.score, &mut grad.params);
            let q_row = self.refined.q_tilde.row(log.exercise);
            let mask_row = self.refined.mask.row(log.exercise);
            let g_row = grad.q_tilde.row_mut(log.exercise);
            for k in 0..dq.len() {
                if mask_row[k] != 0.0 {
                    let s = sigmoid(q_row[k]);
                    g_row[k] += dq[k] * s * (1.0 - s);
                }
            }
        }
        loss += posterior_scale * refine_neg_log_posterior(&self.refined, &self.orders);
        refine_gradient(&self.refined, &self.orders, posterior_scale, &mut grad.q_tilde);
        for (g, m) in grad.q_tilde.as_mut_slice().iter_mut().zip(self.refined.mask.as_slice()) {
            if *m == 0.0 {
                *g = 0.0;
            }
        }
        loss
    }
}

impl Model for NeuralCdmPlus {
    type Grad = PlusGrad;

    fn n_students(&self) -> usize {
        self.params.n_students()
    }

    fn n_exercises(&self) -> usize {
        self.params.n_exercises()
    }

    fn new_grad(&self) -> PlusGrad {
        PlusGrad {
            params: self.params.zeros_like(),
            q_tilde: Matrix::zeros(self.refined.q_tilde.rows(), self.refined.q_tilde.cols()),
        }
    }

    /// The posterior term is weighted by `|batch| / n_train`, so one epoch
    /// applies it once in total.
    fn batch_gradient(&self, batch: &[ResponseLog], n_train: usize, grad: &mut PlusGrad) -> f64 {
        let scale = batch.len() as f64 / n_train as f64;
        self.joint_gradient(batch, scale, grad)
    }

    fn apply(&mut self, adam: &mut Adam, grad: &PlusGrad) -> Result<()> {
        let [a, b, d, w1, b1, w2, b2, w3, b3] = self.params.tensors_mut();
        let g = grad.params.tensors();
        adam.step(
            &mut [a, b, d, w1, b1, w2, b2, w3, b3, &mut self.refined.q_tilde],
            &[g[0], g[1], g[2], g[3], g[4], g[5], g[6], g[7], g[8], &grad.q_tilde],
        )?;
        clamp_positive(&mut self.params);
        self.effective = effective_q(&self.refined);
        Ok(())
    }

    fn predict_one(&self, student: usize, exercise: usize) -> f64 {
        forward_unchecked(&self.params, student, exercise, self.effective.row(exercise)).y
    }

    fn is_finite(&self) -> bool {
        self.params.is_finite() && self.refined.q_tilde.all_finite()
    }
}

/// Trains NeuralCDM+ with the default `λ = 0.1`, `σ = 1`.
pub fn train_plus(
    ds: &SplitDataset,
    q: &QMatrix,
    cand: &CandidateSets,
    cfg: &TrainConfig,
) -> Result<(ModelParams, RefinedQ, History)> {
    train_plus_with(ds, q, cand, cfg, RefineConfig::default())
}

pub fn train_plus_with(
    ds: &SplitDataset,
    q: &QMatrix,
    cand: &CandidateSets,
    cfg: &TrainConfig,
    refine: RefineConfig,
) -> Result<(ModelParams, RefinedQ, History)> {
    cfg.validate()?;
    if q.n_exercises() != ds.n_exercises {
        return Err(Error::Shape(format!(
            "Q-matrix has {} exercises, dataset {}",
            q.n_exercises(),
            ds.n_exercises
        )));
    }
    let mask = build_mask(q, cand)?;
    let orders = build_partial_orders(q, cand)?;
    fit_refined(ds, RefinedQ::new(mask, refine), orders, cfg)
}

/// Ablation without expert labels: every concept is admitted for every
/// exercise and `q̃` is learned from responses alone.
pub fn train_without_qmatrix(
    ds: &SplitDataset,
    n_concepts: usize,
    cfg: &TrainConfig,
) -> Result<(ModelParams, RefinedQ, History)> {
    cfg.validate()?;
    let mask = Matrix::filled(ds.n_exercises, n_concepts, 1.0);
    fit_refined(
        ds,
        RefinedQ::new(mask, RefineConfig::default()),
        PartialOrderSet::default(),
        cfg,
    )
}

fn fit_refined(
    ds: &SplitDataset,
    refined: RefinedQ,
    orders: PartialOrderSet,
    cfg: &TrainConfig,
) -> Result<(ModelParams, RefinedQ, History)> {
    let params = init_params(ds.n_students, ds.n_exercises, refined.mask.cols(), cfg);
    let model = NeuralCdmPlus::new(params, refined, orders);
    let (model, history) = trainer::fit(model, &ds.train, cfg)?;
    Ok((model.params, model.refined, history))
}

/// `exercise_id,concept_id,relevancy` for every admitted cell.
pub fn write_effective_q<W: io::Write>(w: W, rq: &RefinedQ, ids: &IdMaps) -> Result<()> {
    let eff = effective_q(rq);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["exercise_id", "concept_id", "relevancy"])?;
    for e in 0..eff.rows() {
        for k in 0..eff.cols() {
            if rq.mask.get(e, k) != 0.0 {
                out.write_record([
                    ids.exercises.name(e).unwrap_or_default(),
                    ids.concepts.name(k).unwrap_or_default(),
                    &format!("{:.17e}", eff.get(e, k)),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_grad, relative_error, Rng};

    fn cand(sets: Vec<Vec<usize>>, k: usize) -> CandidateSets {
        CandidateSets::from_sets(sets, k, DEFAULT_TOP_K).unwrap()
    }

    #[test]
    fn partial_order_examples() {
        let q = QMatrix::from_pairs(1, 2, [(0, 0)]).unwrap();
        let po = build_partial_orders(&q, &cand(vec![vec![0, 1]], 2)).unwrap();
        assert_eq!(po.triples, vec![(0, 0, 1)]);

        let q = QMatrix::from_pairs(1, 3, [(0, 0), (0, 1)]).unwrap();
        assert!(build_partial_orders(&q, &cand(vec![vec![1, 0]], 3)).unwrap().is_empty());
        let po = build_partial_orders(&q, &cand(vec![vec![2]], 3)).unwrap();
        assert_eq!(po.triples, vec![(0, 0, 2), (0, 1, 2)]);
    }

    #[test]
    fn partial_orders_are_lexicographic() {
        let q = QMatrix::from_pairs(2, 4, [(0, 2), (0, 0), (1, 3)]).unwrap();
        let po = build_partial_orders(&q, &cand(vec![vec![3, 1], vec![0, 2]], 4)).unwrap();
        assert_eq!(
            po.triples,
            vec![(0, 0, 1), (0, 0, 3), (0, 2, 1), (0, 2, 3), (1, 3, 0), (1, 3, 2)]
        );
        let mut sorted = po.triples.clone();
        sorted.sort();
        assert_eq!(sorted, po.triples);
    }

    #[test]
    fn mask_examples() {
        let q = QMatrix::from_pairs(2, 3, [(0, 0)]).unwrap();
        let mask = build_mask(&q, &cand(vec![vec![], vec![1]], 3)).unwrap();
        assert_eq!(mask.row(0), q.dense_row(0).as_slice());
        assert_eq!(mask.row(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn candidate_validation() {
        assert!(CandidateSets::from_sets(vec![vec![0, 0]], 2, 20).is_err());
        assert!(CandidateSets::from_sets(vec![vec![5]], 2, 20).is_err());
        assert!(CandidateSets::from_sets(vec![vec![0, 1]], 2, 1).is_err());
    }

    #[test]
    fn read_candidates_sorts_by_rank_and_truncates() {
        let mut ids = IdMaps::sequential(0, 2, 4);
        ids.concepts.get_or_insert("extra");
        let data = "exercise_id,concept_id,rank\ne0,k3,2\ne0,k1,1\ne0,extra,3\ne1,k0,1\n";
        let c = read_candidates(data.as_bytes(), Path::new("c.csv"), &ids, 2).unwrap();
        assert_eq!(c.get(0), &[1, 3]);
        assert_eq!(c.get(1), &[0]);
        let bad = "exercise_id,concept_id,rank\ne9,k0,1\n";
        assert!(read_candidates(bad.as_bytes(), Path::new("c.csv"), &ids, 2).is_err());
    }

    #[test]
    fn pairwise_logp_values() {
        assert!((pairwise_logp(0.3, 0.3, 0.1) + std::f64::consts::LN_2).abs() < 1e-15);
        // ln σ(1) = −ln(1 + e^−1) = −0.31326168751822286
        assert!((pairwise_logp(10.0, 0.0, 0.1) + 0.313_261_687_518_222_86).abs() < 1e-12);
        let far = pairwise_logp(1e6, 0.0, 0.1);
        assert!(far <= 0.0 && far > -1e-12);
    }

    #[test]
    fn posterior_examples() {
        let cfg = RefineConfig::default();
        let one = PartialOrderSet {
            triples: vec![(0, 0, 1)],
        };
        let rq = RefinedQ::new(Matrix::filled(1, 2, 1.0), cfg);
        assert!((refine_neg_log_posterior(&rq, &one) - std::f64::consts::LN_2).abs() < 1e-15);

        let mut rq = RefinedQ::new(Matrix::filled(1, 1, 1.0), cfg);
        rq.q_tilde.set(0, 0, 2.0);
        assert_eq!(refine_neg_log_posterior(&rq, &PartialOrderSet::default()), 2.0);

        let mut rq = RefinedQ::new(Matrix::filled(2, 3, 1.0), cfg);
        rq.q_tilde.set(0, 0, 10.0);
        let expected = 0.313_261_687_518_222_86 + 50.0;
        assert!((refine_neg_log_posterior(&rq, &one) - expected).abs() < 1e-12);
    }

    #[test]
    fn pairwise_term_decreases_with_gap() {
        let mut prev = f64::INFINITY;
        for gap in [-5.0, -1.0, 0.0, 0.5, 3.0, 20.0] {
            let nl = -pairwise_logp(gap, 0.0, 0.1);
            assert!(nl < prev);
            prev = nl;
        }
    }

    #[test]
    fn effective_q_masks_and_bounds() {
        let mut mask = Matrix::filled(2, 2, 1.0);
        mask.set(1, 0, 0.0);
        let mut rq = RefinedQ::new(mask, RefineConfig::default());
        rq.q_tilde.set(1, 0, 3.0);
        rq.q_tilde.set(0, 1, 30.0);
        let eff = effective_q(&rq);
        assert_eq!(eff.get(0, 0), 0.5);
        assert_eq!(eff.get(1, 0), 0.0);
        assert!(eff.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn refine_gradient_matches_finite_differences() {
        let mut rng = Rng::new(3);
        let mut rq = RefinedQ::new(
            Matrix::filled(3, 4, 1.0),
            RefineConfig {
                lambda: 0.7,
                sigma: 1.3,
            },
        );
        for v in rq.q_tilde.as_mut_slice() {
            *v = rng.normal(0.0, 1.0);
        }
        let dv = PartialOrderSet {
            triples: vec![(0, 0, 1), (0, 0, 3), (1, 2, 0), (2, 1, 3), (2, 2, 3)],
        };
        let mut grad = Matrix::zeros(3, 4);
        refine_gradient(&rq, &dv, 1.0, &mut grad);
        let numeric = finite_diff_grad(
            |x| {
                let mut r = rq.clone();
                r.q_tilde.as_mut_slice().copy_from_slice(x);
                refine_neg_log_posterior(&r, &dv)
            },
            rq.q_tilde.as_slice(),
            1e-5,
        )
        .unwrap();
        for (&a, &n) in grad.as_slice().iter().zip(&numeric) {
            assert!(relative_error(a, n) <= 1e-4, "{a} vs {n}");
        }
    }

    #[test]
    fn joint_gradient_matches_finite_differences() {
        for seed in 0..3 {
            let mut rng = Rng::new(seed);
            let params = ModelParams::init(3, 3, 4, 6, 3, &mut rng);
            let q = QMatrix::from_pairs(3, 4, [(0, 0), (1, 1), (1, 2), (2, 3)]).unwrap();
            let c = cand(vec![vec![1, 2], vec![0], vec![]], 4);
            let mut refined = RefinedQ::new(build_mask(&q, &c).unwrap(), RefineConfig::default());
            for (v, m) in refined.q_tilde.as_mut_slice().iter_mut().zip(refined.mask.as_slice()) {
                if *m != 0.0 {
                    *v = rng.normal(0.0, 1.0);
                }
            }
            let model = NeuralCdmPlus::new(params, refined, build_partial_orders(&q, &c).unwrap());
            let batch = [
                ResponseLog::new(0, 0, 1.0),
                ResponseLog::new(2, 1, 0.0),
                ResponseLog::new(1, 2, 1.0),
            ];
            let mut grad = model.new_grad();
            model.joint_gradient(&batch, 0.4, &mut grad);

            let objective = |m: &NeuralCdmPlus| {
                let mut g = m.new_grad();
                m.joint_gradient(&batch, 0.4, &mut g)
            };
            let at = model.refined.q_tilde.as_slice().to_vec();
            let numeric = finite_diff_grad(
                |x| {
                    let mut m = model.clone();
                    m.refined.q_tilde.as_mut_slice().copy_from_slice(x);
                    m.effective = effective_q(&m.refined);
                    objective(&m)
                },
                &at,
                1e-5,
            )
            .unwrap();
            for (i, (&a, &n)) in grad.q_tilde.as_slice().iter().zip(&numeric).enumerate() {
                if model.refined.mask.as_slice()[i] == 0.0 {
                    assert_eq!(a, 0.0);
                } else {
                    assert!(relative_error(a, n) <= 1e-4, "q̃[{i}]: {a} vs {n}");
                }
            }
            let at = model.params.a.as_slice().to_vec();
            let numeric = finite_diff_grad(
                |x| {
                    let mut m = model.clone();
                    m.params.a.as_mut_slice().copy_from_slice(x);
                    objective(&m)
                },
                &at,
                1e-5,
            )
            .unwrap();
            for (&a, &n) in grad.params.a.as_slice().iter().zip(&numeric) {
                assert!(relative_error(a, n) <= 1e-4);
            }
        }
    }
}
