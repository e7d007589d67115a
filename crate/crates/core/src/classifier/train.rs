use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{batch_stats, Example, SmallNet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Minibatch SGD with classical momentum and per-epoch exponential decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub momentum: f64,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            learning_rate: 0.05,
            lr_decay: 0.9,
            epochs: 25,
            batch_size: 64,
            l2: 0.001,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Hyperparameters tuned for the residual backbone: initial rate 1.0.
    pub fn residual() -> Self {
        Self {
            learning_rate: 1.0,
            ..Self::default()
        }
    }

    /// Settings for desk-scale datasets of a few hundred clips: smaller
    /// minibatches and slower decay give the optimizer enough steps. Chosen on
    /// the validation split at the typical filterbank.
    pub fn desk() -> Self {
        Self {
            learning_rate: 0.1,
            lr_decay: 0.95,
            batch_size: 8,
            ..Self::default()
        }
    }

    /// `default`, `residual` or `desk`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "residual" => Ok(Self::residual()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::config(
                "train.preset",
                format!("unknown preset `{other}` (default, residual, desk)"),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("momentum", self.momentum),
            ("learning_rate", self.learning_rate),
            ("l2", self.l2),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be finite and positive, got {v}")));
            }
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("lr_decay", format!("must lie in (0, 1], got {}", self.lr_decay)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean minibatch loss (cross-entropy plus L2 penalty) seen during the epoch.
    pub loss: f64,
    /// Fraction of training examples classified correctly during the epoch.
    pub accuracy: f64,
}

/// Trains `model` in place on `trainset`; the minibatch order of epoch `e` is
/// a permutation seeded by `(config.seed, e)`.
pub fn train<T: Scalar>(
    mut model: SmallNet<T>,
    trainset: &[Example<T>],
    config: &TrainConfig,
) -> Result<(SmallNet<T>, Vec<EpochStats>)> {
    config.validate()?;
    if trainset.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let momentum = T::lit(config.momentum);
    let l2 = T::lit(config.l2);
    let mut velocity = SmallNet::zeros(model.arch);
    let mut order: Vec<usize> = (0..trainset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr_f64 = config.learning_rate_at(epoch);
        let lr = T::lit(lr_f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[epoch as u64]));
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example<T>> = chunk.iter().map(|&i| &trainset[i]).collect();
            let stats = batch_stats(&model, &batch, l2);
            let loss = stats.loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            correct += stats.correct;
            for ((p, v), g) in model
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(stats.grads.tensors())
            {
                for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = momentum * *v - lr * *g;
                    *p += *v;
                }
            }
        }
        if model.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: f64::NAN,
            });
        }
        history.push(EpochStats {
            epoch,
            learning_rate: lr_f64,
            loss: loss_sum / trainset.len() as f64,
            accuracy: correct as f64 / trainset.len() as f64,
        });
        log::debug!(
            "epoch {epoch}: lr {lr_f64:.4} loss {:.4} acc {:.3}",
            history[epoch].loss,
            history[epoch].accuracy
        );
    }
    Ok((model, history))
}
