use rayon::prelude::*;

use super::model::{argmax, Example, SmallNet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalResult {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Argmax prediction for every example (ties to the lowest class).
pub fn evaluate<T: Scalar>(model: &SmallNet<T>, testset: &[Example<T>]) -> EvalResult {
    let k = model.arch.n_classes;
    let predictions: Vec<usize> = testset
        .par_iter()
        .map(|ex| {
            let s = &ex.features;
            argmax(&model.logits(&s.values, s.n_channels, s.n_frames))
        })
        .collect();
    let mut confusion = vec![vec![0usize; k]; k];
    for (ex, p) in testset.iter().zip(&predictions) {
        confusion[ex.label][*p] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    EvalResult {
        accuracy: if testset.is_empty() {
            0.0
        } else {
            correct as f64 / testset.len() as f64
        },
        confusion,
    }
}
