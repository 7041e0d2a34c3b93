//! Synthetic response data with known proficiencies.
//!
//! Responses follow a MIRT-shaped rule rather than NeuralCDM itself:
//! `p = σ(disc_e · mean_{k ∈ Q_e}(θ_sk − diff_ek) · scale)`, optionally
//! passed through guess/slip noise `p' = g + (1 − g − sl) · p`.

use std::io;

use crate::dataset::{Dataset, IdMaps, QMatrix, ResponseLog};
use crate::error::{Error, Result};
use crate::numeric::{sigmoid, Matrix, Rng};
use crate::qrefine::{CandidateSets, DEFAULT_TOP_K};

const STREAM_THETA: u64 = 1;
const STREAM_Q: u64 = 2;
const STREAM_DIFF: u64 = 3;
const STREAM_DISC: u64 = 4;
const STREAM_RESPONSES: u64 = 5;
const STREAM_DENSITY: u64 = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n_students: usize,
    pub n_exercises: usize,
    pub n_concepts: usize,
    /// Inclusive range of labelled concepts per exercise.
    pub concepts_per_exercise: (usize, usize),
    /// Inclusive range of true discrimination, within (0, 1].
    pub disc_range: (f64, f64),
    pub guess: f64,
    pub slip: f64,
    /// Fraction of exercises each student answers; 1 gives dense logs.
    pub density: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_students: 200,
            n_exercises: 100,
            n_concepts: 8,
            concepts_per_exercise: (1, 3),
            disc_range: (1.0, 1.0),
            guess: 0.0,
            slip: 0.0,
            density: 1.0,
            scale: 5.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_students == 0 || self.n_exercises == 0 || self.n_concepts == 0 {
            return Err(Error::config("synthetic N, M and K must be positive"));
        }
        let (lo, hi) = self.concepts_per_exercise;
        if lo == 0 || lo > hi || hi > self.n_concepts {
            return Err(Error::config(format!(
                "concepts per exercise {lo}..={hi} must lie in 1..={}",
                self.n_concepts
            )));
        }
        let (dlo, dhi) = self.disc_range;
        if !(dlo > 0.0 && dlo <= dhi && dhi <= 1.0) {
            return Err(Error::config(format!(
                "discrimination range ({dlo}, {dhi}) must lie in (0, 1]"
            )));
        }
        if !(self.guess >= 0.0 && self.slip >= 0.0 && self.guess + self.slip <= 1.0) {
            return Err(Error::config("guess and slip must be non-negative with sum at most 1"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::config(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::config("scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub dataset: Dataset,
    /// N×K, entries in (0.05, 0.95).
    pub true_proficiency: Matrix,
    /// M×K per-concept difficulty; only labelled cells affect responses.
    pub difficulty: Matrix,
    pub discrimination: Vec<f64>,
}

/// Response probability before guess/slip noise.
pub fn response_probability(theta: &[f64], difficulty: &[f64], concepts: &[usize], disc: f64, scale: f64) -> f64 {
    let gap: f64 = concepts.iter().map(|&k| theta[k] - difficulty[k]).sum::<f64>() / concepts.len() as f64;
    sigmoid(disc * gap * scale)
}

/// Samples `count` distinct values from `0..n`.
fn sample_distinct(rng: &mut Rng, n: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut pool);
    pool.truncate(count);
    pool
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let (n, m, k) = (spec.n_students, spec.n_exercises, spec.n_concepts);
    let root = Rng::new(spec.seed);

    let mut rng = root.fork(STREAM_THETA);
    let mut theta = Matrix::zeros(n, k);
    for v in theta.as_mut_slice() {
        *v = rng.uniform_in(0.05, 0.95);
    }

    let mut rng = root.fork(STREAM_Q);
    let mut q = QMatrix::empty(m, k);
    let (lo, hi) = spec.concepts_per_exercise;
    for e in 0..m {
        let count = lo + rng.below(hi - lo + 1);
        for c in sample_distinct(&mut rng, k, count) {
            q.insert(e, c)?;
        }
    }

    let mut rng = root.fork(STREAM_DIFF);
    let mut difficulty = Matrix::zeros(m, k);
    for v in difficulty.as_mut_slice() {
        *v = rng.uniform_in(0.05, 0.95);
    }

    let mut rng = root.fork(STREAM_DISC);
    let (dlo, dhi) = spec.disc_range;
    let discrimination: Vec<f64> = (0..m)
        .map(|_| if dlo == dhi { dlo } else { rng.uniform_in(dlo, dhi) })
        .collect();

    let mut answered = vec![true; m];
    let per_student = ((spec.density * m as f64).round() as usize).clamp(2.min(m), m);
    let mut density_rng = root.fork(STREAM_DENSITY);
    let mut rng = root.fork(STREAM_RESPONSES);
    let mut logs = Vec::with_capacity(n * per_student);
    for s in 0..n {
        if per_student < m {
            answered.fill(false);
            for e in sample_distinct(&mut density_rng, m, per_student) {
                answered[e] = true;
            }
        }
        for e in (0..m).filter(|&e| answered[e]) {
            let p = response_probability(
                theta.row(s),
                difficulty.row(e),
                q.concepts(e),
                discrimination[e],
                spec.scale,
            );
            let p = spec.guess + (1.0 - spec.guess - spec.slip) * p;
            let score = if rng.bernoulli(p) { 1.0 } else { 0.0 };
            logs.push(ResponseLog::new(s, e, score));
        }
    }

    let dataset = Dataset::new(logs, q, IdMaps::sequential(n, m, k))?;
    Ok(SynthData {
        dataset,
        true_proficiency: theta,
        difficulty,
        discrimination,
    })
}

/// Corrupts a Q-matrix: each label is dropped with probability `drop_rate`
/// (a row never becomes empty), and each exercise's candidate set holds its
/// dropped concepts plus up to `spurious` random unlabelled ones, shuffled.
pub fn inject_candidates(
    q_true: &QMatrix,
    drop_rate: f64,
    spurious: usize,
    seed: u64,
) -> Result<(QMatrix, CandidateSets)> {
    if !(0.0..=1.0).contains(&drop_rate) {
        return Err(Error::config(format!("drop rate must be in [0, 1], got {drop_rate}")));
    }
    let (m, k) = (q_true.n_exercises(), q_true.n_concepts());
    let mut rng = Rng::new(seed);
    let mut observed = q_true.clone();
    let mut sets = Vec::with_capacity(m);
    for e in 0..m {
        let labelled = q_true.concepts(e);
        let mut dropped: Vec<usize> = labelled.iter().copied().filter(|_| rng.bernoulli(drop_rate)).collect();
        if !labelled.is_empty() && dropped.len() == labelled.len() {
            dropped.remove(rng.below(dropped.len()));
        }
        for &c in &dropped {
            observed.remove(e, c);
        }
        let mut others: Vec<usize> = (0..k).filter(|&c| !q_true.contains(e, c)).collect();
        rng.shuffle(&mut others);
        others.truncate(spurious);
        let mut set = dropped;
        set.extend(others);
        rng.shuffle(&mut set);
        sets.push(set);
    }
    let limit = sets.iter().map(Vec::len).max().unwrap_or(0).max(DEFAULT_TOP_K);
    Ok((observed, CandidateSets::from_sets(sets, k, limit)?))
}

/// `student_id,concept_id,proficiency` rows for a whole N×K matrix.
pub fn write_proficiency_matrix<W: io::Write>(w: W, ids: &IdMaps, proficiency: &Matrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["student_id", "concept_id", "proficiency"])?;
    for s in 0..proficiency.rows() {
        for k in 0..proficiency.cols() {
            out.write_record([
                ids.students.name(s).unwrap_or_default(),
                ids.concepts.name(k).unwrap_or_default(),
                &format!("{:.17e}", proficiency.get(s, k)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
