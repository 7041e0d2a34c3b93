//! WebAssembly bindings behind `www/index.html`: train NeuralCDM on a
//! synthetic population, inspect a student's diagnosis and sweep one
//! proficiency to see the predicted response move.

use wasm_bindgen::prelude::*;

use neuralcd::dataset::split_per_student;
use neuralcd::metrics::{auc, doa, random_proficiency_baseline};
use neuralcd::neuralcdm::{self, forward, ModelParams};
use neuralcd::numeric::{logit, Matrix};
use neuralcd::synth::{generate, SynthData, SynthSpec};
use neuralcd::trainer::TrainConfig;

const DEMO_H1: usize = 32;
const DEMO_H2: usize = 16;

#[wasm_bindgen]
pub struct Demo {
    data: SynthData,
    params: ModelParams,
    q: Matrix,
    test_auc: f64,
    doa: f64,
    random_doa: f64,
    epochs_run: usize,
}

impl Demo {
    pub fn build(
        seed: u32,
        students: usize,
        exercises: usize,
        concepts: usize,
        epochs: usize,
    ) -> neuralcd::Result<Demo> {
        let seed = u64::from(seed);
        let spec = SynthSpec {
            n_students: students,
            n_exercises: exercises,
            n_concepts: concepts,
            seed,
            ..Default::default()
        };
        let data = generate(&spec)?;
        let ds = &data.dataset;
        let split = split_per_student(ds, 0.8, seed)?;
        let cfg = TrainConfig {
            h1: DEMO_H1,
            h2: DEMO_H2,
            epochs,
            seed,
            ..Default::default()
        };
        let (params, history) = neuralcdm::train(&split, &ds.q, &cfg)?;
        let q = ds.q.to_dense();
        let pred = neuralcdm::predict(&params, &split.test, &q)?;
        let labels: Vec<f64> = split.test.iter().map(|l| l.score).collect();
        let test_auc = auc(&pred, &labels)?;
        let doa_value = doa(&params.a.sigmoid(), &ds.logs, &ds.q)?.mean;
        let random = random_proficiency_baseline(ds.n_students(), ds.n_concepts(), seed);
        let random_doa = doa(&random, &ds.logs, &ds.q)?.mean;
        Ok(Demo {
            params,
            q,
            test_auc,
            doa: doa_value,
            random_doa,
            epochs_run: history.epochs.len(),
            data,
        })
    }

    fn check(&self, student: usize, exercise: usize) -> neuralcd::Result<()> {
        let ds = &self.data.dataset;
        if student >= ds.n_students() || exercise >= ds.n_exercises() {
            return Err(neuralcd::Error::Data(format!(
                "student {student} / exercise {exercise} out of range ({} students, {} exercises)",
                ds.n_students(),
                ds.n_exercises()
            )));
        }
        Ok(())
    }

    /// Predicted response of `student` on `exercise` as their proficiency on
    /// `concept` sweeps `points` evenly spaced values in (0, 1).
    pub fn curve(&self, student: usize, exercise: usize, concept: usize, points: usize) -> neuralcd::Result<Vec<f64>> {
        self.check(student, exercise)?;
        if concept >= self.q.cols() || points < 2 {
            return Err(neuralcd::Error::Data(format!(
                "concept {concept} or {points} points out of range"
            )));
        }
        let mut params = self.params.clone();
        (0..points)
            .map(|i| {
                let p = 0.01 + 0.98 * i as f64 / (points - 1) as f64;
                params.a.set(student, concept, logit(p));
                forward(&params, student, exercise, self.q.row(exercise)).map(|(y, _)| y)
            })
            .collect()
    }
}

fn js(err: neuralcd::Error) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen]
impl Demo {
    /// Generates a synthetic population and trains a small NeuralCDM on it.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, students: usize, exercises: usize, concepts: usize, epochs: usize) -> Result<Demo, JsError> {
        Demo::build(seed, students, exercises, concepts, epochs).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn test_auc(&self) -> f64 {
        self.test_auc
    }

    #[wasm_bindgen(getter)]
    pub fn doa(&self) -> f64 {
        self.doa
    }

    #[wasm_bindgen(getter)]
    pub fn random_doa(&self) -> f64 {
        self.random_doa
    }

    #[wasm_bindgen(getter)]
    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    #[wasm_bindgen(getter)]
    pub fn n_students(&self) -> usize {
        self.data.dataset.n_students()
    }

    #[wasm_bindgen(getter)]
    pub fn n_exercises(&self) -> usize {
        self.data.dataset.n_exercises()
    }

    #[wasm_bindgen(getter)]
    pub fn n_concepts(&self) -> usize {
        self.q.cols()
    }

    /// Diagnosed proficiency `σ(A_s)`, one value per concept.
    pub fn proficiency(&self, student: usize) -> Result<Vec<f64>, JsError> {
        self.check(student, 0).map_err(js)?;
        Ok(self
            .params
            .a
            .row(student)
            .iter()
            .map(|&v| neuralcd::numeric::sigmoid(v))
            .collect())
    }

    /// Proficiency the generator used for `student`.
    pub fn true_proficiency(&self, student: usize) -> Result<Vec<f64>, JsError> {
        self.check(student, 0).map_err(js)?;
        Ok(self.data.true_proficiency.row(student).to_vec())
    }

    /// Concepts labelled on `exercise`.
    pub fn concepts_of(&self, exercise: usize) -> Result<Vec<u32>, JsError> {
        self.check(0, exercise).map_err(js)?;
        Ok(self
            .data
            .dataset
            .q
            .concepts(exercise)
            .iter()
            .map(|&k| k as u32)
            .collect())
    }

    pub fn response_curve(
        &self,
        student: usize,
        exercise: usize,
        concept: usize,
        points: usize,
    ) -> Result<Vec<f64>, JsError> {
        self.curve(student, exercise, concept, points).map_err(js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_demo_trains_and_curves_rise() {
        let demo = Demo::build(1, 40, 20, 4, 5).unwrap();
        assert!(demo.test_auc > 0.5 && demo.test_auc <= 1.0);
        assert!((0.0..=1.0).contains(&demo.doa));
        let k = demo.data.dataset.q.concepts(3)[0];
        let curve = demo.curve(2, 3, k, 25).unwrap();
        assert_eq!(curve.len(), 25);
        assert!(curve.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn unlabelled_concept_gives_a_flat_curve() {
        let demo = Demo::build(2, 30, 10, 5, 2).unwrap();
        let e = (0..10).find(|&e| demo.data.dataset.q.concepts(e).len() < 5).unwrap();
        let k = (0..5).find(|&k| !demo.data.dataset.q.contains(e, k)).unwrap();
        let curve = demo.curve(0, e, k, 5).unwrap();
        assert!(curve.iter().all(|&y| y == curve[0]));
    }

    #[test]
    fn out_of_range_is_an_error() {
        let demo = Demo::build(3, 20, 10, 3, 1).unwrap();
        assert!(demo.curve(20, 0, 0, 5).is_err());
        assert!(demo.curve(0, 0, 3, 5).is_err());
        assert!(demo.curve(0, 0, 0, 1).is_err());
    }
}
