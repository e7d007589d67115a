//! TOML run configuration.
//!
//! Every section and key is optional. Missing keys fall back to the typical
//! filterbank (24 filters, 7 kHz, Q = 8, lowest center 100 Hz), 20 ms / 10 ms
//! envelope frames, the desk dataset preset with seed 0, the default training
//! hyperparameters and a three-trial sweep over the filter count. Unknown keys
//! are rejected.
//!
//! ```toml
//! [filterbank]
//! n_filters = 16
//! f_max_hz = 4000
//!
//! [train]
//! preset = "residual"
//! epochs = 10
//!
//! [sweep]
//! parameter = "q"
//! values = [1, 2, 8]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::TrainConfig;
use crate::dataset::Preset;
use crate::envelope::EnvelopeConfig;
use crate::error::{Error, Result};
use crate::experiments::{default_sweeps, SweepParam, SweepSpec};
use crate::filterbank::{FilterbankConfig, DEFAULT_F_MIN_HZ};

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub filterbank: FilterbankSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FilterbankSection {
    pub n_filters: Option<usize>,
    pub f_max_hz: Option<f64>,
    pub q: Option<f64>,
    pub f_min_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    pub window_ms: Option<f64>,
    pub hop_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub root: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

/// `preset` picks `default`, `residual` or `desk` hyperparameters; explicit keys override it.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub preset: Option<String>,
    pub momentum: Option<f64>,
    pub learning_rate: Option<f64>,
    pub lr_decay: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub l2: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            key: "config".into(),
            message: e.message().to_owned(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            key: path.display().to_string(),
            message: e.message().to_owned(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration is always representable")
    }

    /// A fully specified document describing the given settings.
    pub fn describe(
        filterbank: &FilterbankConfig,
        envelope: &EnvelopeConfig,
        root: Option<&Path>,
        preset: Preset,
        seed: u64,
        train: &TrainConfig,
    ) -> Self {
        Self {
            filterbank: FilterbankSection {
                n_filters: Some(filterbank.n_filters),
                f_max_hz: Some(filterbank.f_max_hz),
                q: Some(filterbank.q_filter),
                f_min_hz: Some(filterbank.f_min_hz),
            },
            envelope: EnvelopeSection {
                window_ms: Some(envelope.window_ms),
                hop_ms: Some(envelope.hop_ms),
            },
            dataset: DatasetSection {
                root: root.map(Path::to_path_buf),
                preset: Some(preset.name().to_owned()),
                seed: Some(seed),
            },
            train: TrainSection {
                preset: None,
                momentum: Some(train.momentum),
                learning_rate: Some(train.learning_rate),
                lr_decay: Some(train.lr_decay),
                epochs: Some(train.epochs),
                batch_size: Some(train.batch_size),
                l2: Some(train.l2),
                seed: Some(train.seed),
            },
            sweep: SweepSection::default(),
        }
    }

    pub fn filterbank(&self) -> Result<FilterbankConfig> {
        let t = FilterbankConfig::typical();
        let s = &self.filterbank;
        let c = FilterbankConfig {
            n_filters: s.n_filters.unwrap_or(t.n_filters),
            f_max_hz: s.f_max_hz.unwrap_or(t.f_max_hz),
            q_filter: s.q.unwrap_or(t.q_filter),
            f_min_hz: s.f_min_hz.unwrap_or(DEFAULT_F_MIN_HZ),
            sample_rate_hz: t.sample_rate_hz,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn envelope(&self) -> Result<EnvelopeConfig> {
        let d = EnvelopeConfig::default();
        let c = EnvelopeConfig {
            window_ms: self.envelope.window_ms.unwrap_or(d.window_ms),
            hop_ms: self.envelope.hop_ms.unwrap_or(d.hop_ms),
            ..d
        };
        c.frame_geometry()?;
        Ok(c)
    }

    pub fn preset(&self) -> Result<Preset> {
        self.dataset.preset.as_deref().unwrap_or("desk").parse()
    }

    pub fn dataset_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(0)
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let s = &self.train;
        let base = TrainConfig::preset(s.preset.as_deref().unwrap_or("default"))?;
        let c = TrainConfig {
            momentum: s.momentum.unwrap_or(base.momentum),
            learning_rate: s.learning_rate.unwrap_or(base.learning_rate),
            lr_decay: s.lr_decay.unwrap_or(base.lr_decay),
            epochs: s.epochs.unwrap_or(base.epochs),
            batch_size: s.batch_size.unwrap_or(base.batch_size),
            l2: s.l2.unwrap_or(base.l2),
            seed: s.seed.unwrap_or(base.seed),
        };
        c.validate()?;
        Ok(c)
    }

    /// Sweep over `[sweep] parameter`, using its default value list unless overridden.
    pub fn sweep(&self) -> Result<SweepSpec> {
        let param: SweepParam = self.sweep.parameter.as_deref().unwrap_or("n_filters").parse()?;
        let mut spec = default_sweeps()
            .into_iter()
            .find(|s| s.parameter == param)
            .expect("every parameter has a default sweep");
        spec.base = self.filterbank()?;
        spec.preset = self.preset()?;
        spec.seed = self.dataset_seed();
        if let Some(values) = &self.sweep.values {
            spec.values = values.clone();
        }
        if let Some(trials) = self.sweep.trials {
            spec.trials = trials;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfigFile::parse("").unwrap();
        assert_eq!(c.filterbank().unwrap(), FilterbankConfig::typical());
        assert_eq!(c.envelope().unwrap(), EnvelopeConfig::default());
        assert_eq!(c.train().unwrap(), TrainConfig::default());
        assert_eq!(c.preset().unwrap(), Preset::Desk);
        let s = c.sweep().unwrap();
        assert_eq!(s.parameter, SweepParam::NFilters);
        assert_eq!(s.trials, 3);
        assert_eq!(s.values.len(), 15);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfigFile::parse(
            "[filterbank]\nn_filters = 10\nf_max_hz = 2000\nq = 2\n\
             [train]\npreset = \"residual\"\nepochs = 3\n\
             [sweep]\nparameter = \"q\"\nvalues = [1, 2]\ntrials = 2\n",
        )
        .unwrap();
        assert_eq!(c.filterbank().unwrap(), FilterbankConfig::tiny());
        let t = c.train().unwrap();
        assert_eq!((t.learning_rate, t.epochs), (1.0, 3));
        let s = c.sweep().unwrap();
        assert_eq!((s.parameter, s.values.clone(), s.trials), (SweepParam::Q, vec![1.0, 2.0], 2));
        assert_eq!(s.base, FilterbankConfig::tiny());
    }

    #[test]
    fn described_settings_round_trip() {
        let train = TrainConfig {
            seed: 42,
            ..TrainConfig::desk()
        };
        let doc = RunConfigFile::describe(
            &FilterbankConfig::tiny(),
            &EnvelopeConfig::default(),
            Some(Path::new("/data/gscd")),
            Preset::Small,
            7,
            &train,
        );
        let back = RunConfigFile::parse(&doc.to_toml_string()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.filterbank().unwrap(), FilterbankConfig::tiny());
        assert_eq!(back.train().unwrap(), train);
        assert_eq!((back.preset().unwrap(), back.dataset_seed()), (Preset::Small, 7));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_named() {
        let err = RunConfigFile::parse("[filterbank]\nn_filter = 3\n").unwrap_err();
        assert!(err.to_string().contains("n_filter"), "{err}");
        let err = RunConfigFile::parse("[bogus]\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let c = RunConfigFile::parse("[filterbank]\nn_filters = 0\n").unwrap();
        assert!(c.filterbank().unwrap_err().to_string().contains("n_filters"));
        let c = RunConfigFile::parse("[train]\npreset = \"fast\"\n").unwrap();
        assert!(c.train().unwrap_err().is_usage());
    }
}
