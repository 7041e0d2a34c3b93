//! Prediction metrics (accuracy, RMSE, AUC) and the degree-of-agreement
//! (DOA) interpretability metric.
//!
//! Labels are binarised at 0.5 wherever a metric needs classes.

use std::fmt;

use crate::dataset::{QMatrix, ResponseLog};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

fn check_lengths(pred: &[f64], label: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::data("no predictions to evaluate"));
    }
    if pred.len() != label.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            pred.len(),
            label.len()
        )));
    }
    Ok(())
}

#[inline]
fn is_positive(label: f64) -> bool {
    label >= 0.5
}

/// Fraction of predictions on the correct side of `threshold`; a prediction
/// equal to the threshold counts as positive.
pub fn accuracy(pred: &[f64], label: &[f64], threshold: f64) -> Result<f64> {
    check_lengths(pred, label)?;
    let hits = pred
        .iter()
        .zip(label)
        .filter(|(&p, &l)| (p >= threshold) == is_positive(l))
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

pub fn rmse(pred: &[f64], label: &[f64]) -> Result<f64> {
    check_lengths(pred, label)?;
    let sse: f64 = pred.iter().zip(label).map(|(p, l)| (p - l).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Rank-based (Mann–Whitney) AUC; tied predictions share their mean rank.
pub fn auc(pred: &[f64], label: &[f64]) -> Result<f64> {
    check_lengths(pred, label)?;
    let n_pos = label.iter().filter(|&&l| is_positive(l)).count();
    let n_neg = label.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::data("AUC needs both positive and negative labels"));
    }

    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| pred[a].total_cmp(&pred[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pred[order[j]] == pred[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if is_positive(label[idx]) {
                pos_rank_sum += midrank;
            }
        }
        i = j;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    pub rmse: f64,
    pub auc: f64,
    pub n: usize,
}

pub fn evaluate(pred: &[f64], label: &[f64]) -> Result<EvalResult> {
    Ok(EvalResult {
        accuracy: accuracy(pred, label, 0.5)?,
        rmse: rmse(pred, label)?,
        auc: auc(pred, label)?,
        n: pred.len(),
    })
}

impl EvalResult {
    pub fn key_values(&self) -> String {
        format!(
            "n={}\naccuracy={:.6}\nrmse={:.6}\nauc={:.6}\n",
            self.n, self.accuracy, self.rmse, self.auc
        )
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "logs      {:>9}", self.n)?;
        writeln!(f, "accuracy  {:>9.4}", self.accuracy)?;
        writeln!(f, "RMSE      {:>9.4}", self.rmse)?;
        writeln!(f, "AUC       {:>9.4}", self.auc)
    }
}

/// Which co-answered exercises of a student pair enter the DOA ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DoaConvention {
    /// Only exercises both students answered with different scores. A
    /// proficiency vector unrelated to the responses scores ≈ 0.5.
    #[default]
    Decisive,
    /// Every exercise both students answered; equal scores earn nothing.
    Strict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoaResult {
    /// `None` for concepts where no student pair is ordered by proficiency.
    pub per_concept: Vec<Option<f64>>,
    pub mean: f64,
}

/// Mean score per answered exercise, per student, sorted by exercise.
fn mean_scores(logs: &[ResponseLog], n_students: usize) -> Vec<Vec<(usize, f64)>> {
    let mut raw: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_students];
    for log in logs {
        raw[log.student].push((log.exercise, log.score));
    }
    raw.into_iter()
        .map(|mut v| {
            v.sort_by_key(|&(e, _)| e);
            let mut out: Vec<(usize, f64)> = Vec::new();
            let mut counts: Vec<usize> = Vec::new();
            for (e, r) in v {
                match out.last_mut() {
                    Some((le, sum)) if *le == e => {
                        *sum += r;
                        *counts.last_mut().unwrap() += 1;
                    }
                    _ => {
                        out.push((e, r));
                        counts.push(1);
                    }
                }
            }
            for ((_, sum), c) in out.iter_mut().zip(counts) {
                *sum /= c as f64;
            }
            out
        })
        .collect()
}

/// Degree of agreement between a proficiency matrix (N×K) and observed
/// responses, per concept and averaged over concepts with an ordered pair.
pub fn doa(proficiency: &Matrix, logs: &[ResponseLog], q: &QMatrix) -> Result<DoaResult> {
    doa_with(proficiency, logs, q, DoaConvention::default())
}

pub fn doa_with(
    proficiency: &Matrix,
    logs: &[ResponseLog],
    q: &QMatrix,
    convention: DoaConvention,
) -> Result<DoaResult> {
    let (n, k_count) = proficiency.shape();
    if k_count != q.n_concepts() {
        return Err(Error::Shape(format!(
            "proficiency has {k_count} concepts, Q-matrix {}",
            q.n_concepts()
        )));
    }
    crate::trainer::check_indices(logs, n, q.n_exercises())?;
    let scores = mean_scores(logs, n);

    let mut per_concept = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let answered: Vec<Vec<(usize, f64)>> = scores
            .iter()
            .map(|v| v.iter().copied().filter(|&(e, _)| q.contains(e, k)).collect())
            .collect();
        let mut z = 0u64;
        let mut total = 0.0;
        for a in 0..n {
            let fa = proficiency.get(a, k);
            for b in 0..n {
                if fa <= proficiency.get(b, k) {
                    continue;
                }
                z += 1;
                let (wins, den) = pair_counts(&answered[a], &answered[b], convention);
                if den > 0 {
                    total += wins as f64 / den as f64;
                }
            }
        }
        per_concept.push((z > 0).then(|| total / z as f64));
    }

    let defined: Vec<f64> = per_concept.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::data("DOA undefined: no concept has an ordered student pair"));
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(DoaResult { per_concept, mean })
}

/// (exercises where a scored higher, exercises entering the denominator)
fn pair_counts(a: &[(usize, f64)], b: &[(usize, f64)], convention: DoaConvention) -> (usize, usize) {
    let (mut i, mut j) = (0, 0);
    let (mut wins, mut den) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let (ra, rb) = (a[i].1, b[j].1);
                if ra > rb {
                    wins += 1;
                }
                if convention == DoaConvention::Strict || ra != rb {
                    den += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    (wins, den)
}

/// Uniform proficiencies in (0,1), the "random diagnosis" reference point.
pub fn random_proficiency_baseline(n_students: usize, n_concepts: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    let data = (0..n_students * n_concepts)
        .map(|_| loop {
            let u = rng.uniform();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    Matrix::from_vec(n_students, n_concepts, data).expect("uniform draws are finite")
}
