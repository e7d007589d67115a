//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use afb_core::classifier::*;
use afb_core::extractor::Spectrogram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_examples(seed: u64, n: usize, h: usize, w: usize) -> Vec<Example<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| Example {
            features: Spectrogram::from_values(h, w, (0..h * w).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap(),
            label: i % 11,
        })
        .collect()
}

/// Largest relative error between backprop and central differences over every parameter.
pub fn max_gradient_error(seed: u64) -> f64 {
    let model = init_model::<f64>(seed, Architecture::default());
    let data = random_examples(seed ^ 0x5eed, 2, 6, 9);
    let batch: Vec<&Example<f64>> = data.iter().collect();
    let l2 = 1e-3;
    let (_, grads) = loss_and_gradients(&model, &batch, l2);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for t in 0..6 {
        for i in 0..model.tensors()[t].len() {
            let mut plus = model.clone();
            plus.tensors_mut()[t][i] += step;
            let mut minus = model.clone();
            minus.tensors_mut()[t][i] -= step;
            let numeric = (loss_and_gradients(&plus, &batch, l2).0 - loss_and_gradients(&minus, &batch, l2).0) / (2.0 * step);
            let analytic = grads.tensors()[t][i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}
