//! Mini-batch training loop shared by NeuralCDM, NeuralCDM+ and the baselines.

use crate::dataset::ResponseLog;
use crate::error::{Error, Result};
use crate::metrics;
use crate::numeric::{Adam, AdamConfig, Rng};

/// Probability clip applied before taking logs in the cross-entropy.
pub const EPS_CLIP: f64 = 1e-9;

// Stream ids for `Rng::fork`; stream 0 is the root stream itself.
pub(crate) const STREAM_INIT: u64 = 1;
const STREAM_HOLDOUT: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;

/// Binary cross-entropy of one prediction, with `y` clipped to
/// `[EPS_CLIP, 1 - EPS_CLIP]`.
#[inline]
pub fn cross_entropy(y: f64, r: f64) -> f64 {
    let y = y.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
    -(r * y.ln() + (1.0 - r) * (1.0 - y).ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub h1: usize,
    pub h2: usize,
    /// Epochs without held-out improvement before stopping; 0 disables early stopping.
    pub early_stop_patience: usize,
    /// Fraction of the training logs held out for model selection; 0 disables it.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: AdamConfig::default().lr,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            h1: 512,
            h2: 256,
            early_stop_patience: 5,
            holdout_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h1 == 0 || self.h2 == 0 {
            return Err(Error::config("hidden widths must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::config(format!(
                "holdout fraction must be in [0,1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-log cross-entropy over the fitted logs, measured after the epoch.
    pub train_loss: f64,
    pub holdout_loss: Option<f64>,
    pub holdout_auc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were returned.
    pub best_epoch: usize,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,holdout_auc\n");
        for rec in &self.epochs {
            let auc = rec.holdout_auc.map_or(String::new(), |a| format!("{a:.17e}"));
            out.push_str(&format!("{},{:.17e},{}\n", rec.epoch, rec.train_loss, auc));
        }
        out
    }
}

/// A model the shared loop can fit.
pub trait Model: Clone {
    type Grad;

    fn n_students(&self) -> usize;
    fn n_exercises(&self) -> usize;

    fn new_grad(&self) -> Self::Grad;

    /// Zeroes `grad`, fills it with the gradient of the batch objective and
    /// returns the objective. `n_train` is the size of the fitted log set,
    /// for terms that should be spread evenly over an epoch.
    fn batch_gradient(&self, batch: &[ResponseLog], n_train: usize, grad: &mut Self::Grad) -> f64;

    /// One optimizer step followed by any projection the family needs.
    fn apply(&mut self, adam: &mut Adam, grad: &Self::Grad) -> Result<()>;

    fn predict_one(&self, student: usize, exercise: usize) -> f64;

    fn is_finite(&self) -> bool;
}

pub fn check_indices(logs: &[ResponseLog], n_students: usize, n_exercises: usize) -> Result<()> {
    for log in logs {
        if log.student >= n_students {
            return Err(Error::Index {
                kind: "student",
                index: log.student,
                len: n_students,
            });
        }
        if log.exercise >= n_exercises {
            return Err(Error::Index {
                kind: "exercise",
                index: log.exercise,
                len: n_exercises,
            });
        }
    }
    Ok(())
}

pub fn predict_logs<M: Model>(model: &M, logs: &[ResponseLog]) -> Result<Vec<f64>> {
    check_indices(logs, model.n_students(), model.n_exercises())?;
    Ok(logs.iter().map(|l| model.predict_one(l.student, l.exercise)).collect())
}

fn mean_loss<M: Model>(model: &M, logs: &[ResponseLog]) -> f64 {
    let total: f64 = logs
        .iter()
        .map(|l| cross_entropy(model.predict_one(l.student, l.exercise), l.score))
        .sum();
    total / logs.len() as f64
}

/// Splits off the internal model-selection holdout.
fn carve_holdout(logs: &[ResponseLog], cfg: &TrainConfig) -> (Vec<ResponseLog>, Vec<ResponseLog>) {
    let n_hold = (cfg.holdout_fraction * logs.len() as f64).round() as usize;
    if n_hold == 0 || n_hold >= logs.len() {
        return (logs.to_vec(), Vec::new());
    }
    let mut order: Vec<usize> = (0..logs.len()).collect();
    Rng::new(cfg.seed).fork(STREAM_HOLDOUT).shuffle(&mut order);
    let mut is_hold = vec![false; logs.len()];
    for &i in &order[..n_hold] {
        is_hold[i] = true;
    }
    let (hold, fit): (Vec<_>, Vec<_>) = logs.iter().zip(&is_hold).partition(|(_, &h)| h);
    (
        fit.into_iter().map(|(l, _)| *l).collect(),
        hold.into_iter().map(|(l, _)| *l).collect(),
    )
}

/// Fits `model` on `train` and returns the parameters from the best held-out
/// epoch (or the last epoch when there is no holdout).
pub fn fit<M: Model>(mut model: M, train: &[ResponseLog], cfg: &TrainConfig) -> Result<(M, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    check_indices(train, model.n_students(), model.n_exercises())?;

    let (fit_logs, holdout) = carve_holdout(train, cfg);
    let mut order = fit_logs.clone();
    let mut shuffle_rng = Rng::new(cfg.seed).fork(STREAM_SHUFFLE);
    let mut adam = Adam::new(cfg.adam());
    let mut grad = model.new_grad();

    let mut history = History::default();
    let mut best: Option<(f64, M)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let loss = model.batch_gradient(batch, fit_logs.len(), &mut grad);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {epoch}, batch {b}")));
            }
            model.apply(&mut adam, &grad)?;
            if !model.is_finite() {
                return Err(Error::NonFinite(format!("parameters at epoch {epoch}, batch {b}")));
            }
        }

        let train_loss = mean_loss(&model, &fit_logs);
        let (holdout_loss, holdout_auc) = if holdout.is_empty() {
            (None, None)
        } else {
            let preds: Vec<f64> = holdout
                .iter()
                .map(|l| model.predict_one(l.student, l.exercise))
                .collect();
            let labels: Vec<f64> = holdout.iter().map(|l| l.score).collect();
            (Some(mean_loss(&model, &holdout)), metrics::auc(&preds, &labels).ok())
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            holdout_loss,
            holdout_auc,
        });

        let Some(hold_loss) = holdout_loss else {
            history.best_epoch = epoch;
            continue;
        };
        // AUC selects; a single-class holdout falls back to its loss
        let score = holdout_auc.unwrap_or(-hold_loss);
        match &best {
            Some((s, _)) if score <= *s => since_best += 1,
            _ => {
                best = Some((score, model.clone()));
                history.best_epoch = epoch;
                since_best = 0;
            }
        }
        if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
            break;
        }
    }

    if let Some((_, m)) = best {
        model = m;
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_values() {
        assert!((cross_entropy(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(cross_entropy(1.0, 1.0) < 1e-8);
        assert!(cross_entropy(0.0, 1.0).is_finite());
    }

    #[test]
    fn holdout_is_deterministic_partition() {
        let logs: Vec<ResponseLog> = (0..50).map(|i| ResponseLog::new(i % 5, i, 1.0)).collect();
        let cfg = TrainConfig::default();
        let (fit, hold) = carve_holdout(&logs, &cfg);
        assert_eq!(hold.len(), 5);
        assert_eq!(fit.len() + hold.len(), 50);
        assert_eq!((fit.clone(), hold.clone()), carve_holdout(&logs, &cfg));
        let no_hold = TrainConfig {
            holdout_fraction: 0.0,
            ..cfg
        };
        assert!(carve_holdout(&logs, &no_hold).1.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                h1: 0,
                ..Default::default()
            },
            TrainConfig {
                lr: 0.0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                holdout_fraction: 1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }
}
