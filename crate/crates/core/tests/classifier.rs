use afb_core::classifier::*;
use afb_core::extractor::Spectrogram;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{max_gradient_error, random_examples};

#[test]
fn gradients_match_central_differences() {
    for seed in [1, 2, 3] {
        let err = max_gradient_error(seed);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn loss_decomposes_into_cross_entropy_and_penalty() {
    let model = init_model::<f64>(9, Architecture::default());
    let data = random_examples(4, 3, 8, 10);
    let batch: Vec<&Example<f64>> = data.iter().collect();
    let (plain, _) = loss_and_gradients(&model, &batch, 0.0);
    let (penalized, _) = loss_and_gradients(&model, &batch, 0.01);
    let expected = 0.005 * model.weight_sq_norm();
    assert!((penalized - plain - expected).abs() < 1e-12);
}

#[test]
fn uniform_model_has_log11_loss() {
    let model = SmallNet::<f64>::zeros(Architecture::default());
    let data = random_examples(5, 11, 4, 4);
    let batch: Vec<&Example<f64>> = data.iter().collect();
    let (loss, _) = loss_and_gradients(&model, &batch, 0.0);
    assert!((loss - 11f64.ln()).abs() < 1e-12, "{loss}");
}

#[test]
fn fresh_model_outputs_are_near_uniform() {
    let data = random_examples(6, 20, 24, 99);
    for seed in 0..5 {
        let model = init_model::<f64>(seed, Architecture::default());
        for ex in &data {
            let p = forward(&model, &ex.features);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| (0.02..=0.25).contains(&v)), "{p:?}");
        }
    }
}

/// Each example gets its own random row profile plus a little noise. Pure
/// i.i.d. noise would look identical to the network after global pooling.
fn profiled_examples(seed: u64, n: usize, h: usize, w: usize) -> Vec<Example<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let levels: Vec<f32> = (0..h).map(|_| rng.random_range(-2.0..2.0)).collect();
            let values = (0..h * w).map(|k| levels[k / w] + rng.random_range(-0.1..0.1)).collect();
            Example {
                features: Spectrogram::from_values(h, w, values).unwrap(),
                label: i % 11,
            }
        })
        .collect()
}

#[test]
fn overfits_two_examples_per_class() {
    let data = profiled_examples(7, 22, 12, 20);
    let config = TrainConfig {
        epochs: 300,
        lr_decay: 1.0,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, history) = train(init_model::<f32>(1, Architecture::default()), &data, &config).unwrap();
    assert!(history[1].loss < history[0].loss && history[2].loss < history[1].loss, "{history:?}");
    let eval = evaluate(&model, &data);
    assert_eq!(eval.accuracy, 1.0, "final loss {}", history.last().unwrap().loss);
    for (i, row) in eval.confusion.iter().enumerate() {
        assert_eq!(row[i], 2);
    }
}

#[test]
fn training_is_deterministic() {
    let data: Vec<Example<f32>> = random_examples(8, 30, 6, 12)
        .into_iter()
        .map(|e| Example {
            features: e.features.cast(),
            label: e.label,
        })
        .collect();
    let config = TrainConfig {
        epochs: 3,
        batch_size: 8,
        seed: 5,
        ..TrainConfig::default()
    };
    let run = || train(init_model::<f32>(2, Architecture::default()), &data, &config).unwrap();
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (c, _) = single.install(run);
    assert_eq!(a, c);
    let (d, _) = train(init_model::<f32>(2, Architecture::default()), &data, &TrainConfig { seed: 6, ..config }).unwrap();
    assert_ne!(a, d);
}

#[test]
fn second_epoch_rate_is_decayed_once() {
    let c = TrainConfig::default();
    assert_eq!(c.learning_rate_at(0), 0.05);
    assert!((c.learning_rate_at(1) - 0.9 * 0.05).abs() < 1e-15);
    assert_eq!(TrainConfig::residual().learning_rate, 1.0);
}

#[test]
fn diverging_training_is_reported() {
    let data: Vec<Example<f32>> = random_examples(9, 11, 6, 6)
        .into_iter()
        .map(|e| Example {
            features: e.features.cast(),
            label: e.label,
        })
        .collect();
    let config = TrainConfig {
        learning_rate: 1e30,
        epochs: 5,
        ..TrainConfig::default()
    };
    match train(init_model::<f32>(0, Architecture::default()), &data, &config) {
        Err(afb_core::Error::TrainingDiverged { .. }) => {}
        other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
    }
}

#[test]
fn checkpoint_round_trips_through_a_file() {
    let model = init_model::<f32>(11, Architecture::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.afbm");
    write_checkpoint(&model, std::fs::File::create(&path).unwrap()).unwrap();
    let back: SmallNet<f32> = read_checkpoint(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(model, back);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], AFBM_MAGIC);
    assert_eq!(bytes.len(), 48 + 4 * model.n_parameters());
}
