//! Neural cognitive diagnosis.
//!
//! Students and exercises are embedded as factor vectors (per-concept
//! proficiency, per-concept difficulty, discrimination) and combined through
//! a monotone neural interaction function. Trained proficiencies are read
//! back as an interpretable diagnosis.

pub mod baselines;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod neuralcdm;
pub mod numeric;
pub mod qrefine;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
