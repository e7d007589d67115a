use std::path::PathBuf;

use rayon::prelude::*;

use super::features::{extract_features, FeatureSet};
use super::spec::{SweepParam, SweepSpec};
use crate::classifier::{confidence_interval, evaluate, init_model, mean, train, Architecture, EvalResult, TrainConfig};
use crate::dataset::DatasetSplits;
use crate::envelope::EnvelopeConfig;
use crate::error::{Error, Result};
use crate::filterbank::FilterbankConfig;
use crate::power::{power_ratio, relative_power};
use crate::seed;

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub envelope: EnvelopeConfig,
    /// Its `seed` field is replaced by each trial's seed.
    pub train: TrainConfig,
    pub arch: Architecture,
    /// Size of the thread pool jobs run on. Results do not depend on it.
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            envelope: EnvelopeConfig::default(),
            train: TrainConfig::default(),
            arch: Architecture::default(),
            workers: 1,
            cache_dir: None,
        }
    }
}

impl HarnessOptions {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Seed of trial `trial` at sweep point `point`; drives both initialization and minibatch order.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    seed::derive(base, &[point as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Completed { accuracy: f64, eval: EvalResult },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
}

impl TrialRecord {
    pub fn accuracy(&self) -> Option<f64> {
        match &self.outcome {
            TrialOutcome::Completed { accuracy, .. } => Some(*accuracy),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

/// Mean and 95% interval over the trials that completed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub completed: usize,
    pub requested: usize,
}

impl Summary {
    pub fn from_trials(trials: &[TrialRecord]) -> Self {
        let acc: Vec<f64> = trials.iter().filter_map(TrialRecord::accuracy).collect();
        let ci = match acc.len() {
            0 => None,
            1 => Some((acc[0], acc[0])),
            _ => confidence_interval(&acc, 0.95).ok(),
        };
        Self {
            mean: (!acc.is_empty()).then(|| mean(&acc)),
            ci,
            completed: acc.len(),
            requested: trials.len(),
        }
    }

    pub fn incomplete(&self) -> bool {
        self.completed < self.requested
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub index: usize,
    pub value: f64,
    pub config: FilterbankConfig,
    pub relative_power: f64,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn n_records(&self) -> usize {
        self.points.iter().map(|p| p.trials.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub a: FilterbankConfig,
    pub b: FilterbankConfig,
    /// Power of `a` over power of `b`.
    pub power_ratio: f64,
    pub a_trials: Vec<TrialRecord>,
    pub b_trials: Vec<TrialRecord>,
    pub a_summary: Summary,
    pub b_summary: Summary,
}

impl ComparisonResult {
    /// Mean accuracy of `a` minus that of `b`.
    pub fn accuracy_delta(&self) -> Option<f64> {
        Some(self.a_summary.mean? - self.b_summary.mean?)
    }
}

fn run_trial(features: &FeatureSet, point: usize, trial: usize, seed: u64, options: &HarnessOptions) -> Result<TrialRecord> {
    let model = init_model::<f32>(seed, options.arch);
    let config = TrainConfig {
        seed,
        ..options.train
    };
    let outcome = match train(model, &features.train, &config) {
        Ok((model, _)) => {
            let eval = evaluate(&model, &features.test);
            TrialOutcome::Completed {
                accuracy: eval.accuracy,
                eval,
            }
        }
        Err(e @ Error::TrainingDiverged { .. }) => {
            log::warn!("point {point} trial {trial} failed: {e}");
            TrialOutcome::Failed { reason: e.to_string() }
        }
        Err(e) => {
            return Err(Error::Experiment {
                point,
                trial: Some(trial),
                source: Box::new(e),
            })
        }
    };
    Ok(TrialRecord {
        point,
        trial,
        seed,
        outcome,
    })
}

fn run_trials(features: &FeatureSet, point: usize, seeds: &[u64], options: &HarnessOptions) -> Result<Vec<TrialRecord>> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(t, &s)| run_trial(features, point, t, s, options))
        .collect()
}

fn features_at(config: &FilterbankConfig, point: usize, dataset: &DatasetSplits, options: &HarnessOptions) -> Result<FeatureSet> {
    extract_features(config, &options.envelope, dataset, options.cache_dir.as_deref()).map_err(|e| Error::Experiment {
        point,
        trial: None,
        source: Box::new(e),
    })
}

/// Trains and tests `trials` classifiers on features from one filterbank.
pub fn run_point(
    config: &FilterbankConfig,
    value: f64,
    point: usize,
    trials: usize,
    base_seed: u64,
    dataset: &DatasetSplits,
    options: &HarnessOptions,
) -> Result<PointResult> {
    let relative_power = relative_power(config)?.relative_units;
    let pool = options.pool()?;
    pool.install(|| {
        let features = features_at(config, point, dataset, options)?;
        let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(base_seed, point, t)).collect();
        let trials = run_trials(&features, point, &seeds, options)?;
        log::info!("point {point} ({value}): {:?}", trials.iter().map(TrialRecord::accuracy).collect::<Vec<_>>());
        Ok(PointResult {
            index: point,
            value,
            config: *config,
            relative_power,
            summary: Summary::from_trials(&trials),
            trials,
        })
    })
}

pub fn run_sweep(spec: &SweepSpec, dataset: &DatasetSplits, options: &HarnessOptions) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec
        .points()
        .iter()
        .zip(&spec.values)
        .enumerate()
        .map(|(i, (config, &value))| run_point(config, value, i, spec.trials, spec.seed, dataset, options))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        parameter: spec.parameter,
        points,
    })
}

/// Trains both filterbanks with the same per-trial seeds.
pub fn compare_configs(
    a: &FilterbankConfig,
    b: &FilterbankConfig,
    trials: usize,
    base_seed: u64,
    dataset: &DatasetSplits,
    options: &HarnessOptions,
) -> Result<ComparisonResult> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let ratio = power_ratio(a, b)?;
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(base_seed, 0, t)).collect();
    let pool = options.pool()?;
    let (a_trials, b_trials) = pool.install(|| -> Result<_> {
        let fa = features_at(a, 0, dataset, options)?;
        let a_trials = run_trials(&fa, 0, &seeds, options)?;
        drop(fa);
        let fb = features_at(b, 1, dataset, options)?;
        let b_trials = run_trials(&fb, 1, &seeds, options)?;
        Ok((a_trials, b_trials))
    })?;
    Ok(ComparisonResult {
        a: *a,
        b: *b,
        power_ratio: ratio,
        a_summary: Summary::from_trials(&a_trials),
        b_summary: Summary::from_trials(&b_trials),
        a_trials,
        b_trials,
    })
}
