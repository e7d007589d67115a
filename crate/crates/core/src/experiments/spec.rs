use crate::dataset::Preset;
use crate::error::{Error, Result};
use crate::filterbank::FilterbankConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    NFilters,
    FMax,
    Q,
}

impl SweepParam {
    pub const ALL: [SweepParam; 3] = [SweepParam::NFilters, SweepParam::FMax, SweepParam::Q];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NFilters => "n_filters",
            SweepParam::FMax => "f_max",
            SweepParam::Q => "q",
        }
    }

    /// Axis label with units; f_max values are in Hz.
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::NFilters => "number of filters",
            SweepParam::FMax => "highest center frequency (Hz)",
            SweepParam::Q => "filter quality factor Q",
        }
    }

    pub fn log_scale(self) -> bool {
        !matches!(self, SweepParam::NFilters)
    }

    /// `base` with this parameter replaced by `value`.
    pub fn apply(self, base: &FilterbankConfig, value: f64) -> FilterbankConfig {
        let mut c = *base;
        match self {
            SweepParam::NFilters => c.n_filters = value.round() as usize,
            SweepParam::FMax => c.f_max_hz = value,
            SweepParam::Q => c.q_filter = value,
        }
        c
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_filters" | "n" => Ok(SweepParam::NFilters),
            "f_max" | "f_max_hz" | "fmax" => Ok(SweepParam::FMax),
            "q" | "q_filter" => Ok(SweepParam::Q),
            other => Err(Error::config(
                "sweep.parameter",
                format!("unknown parameter `{other}` (n_filters, f_max, q)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    /// The two parameters not being swept stay at their values here.
    pub base: FilterbankConfig,
    pub trials: usize,
    pub preset: Preset,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(parameter: SweepParam, values: Vec<f64>) -> Self {
        Self {
            parameter,
            values,
            base: FilterbankConfig::typical(),
            trials: 3,
            preset: Preset::Small,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::config("sweep.values", format!("must be finite and positive, got {v}")));
        }
        if self.parameter == SweepParam::NFilters {
            if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0) {
                return Err(Error::config("sweep.values", format!("filter counts must be integers, got {v}")));
            }
        }
        if self.trials == 0 {
            return Err(Error::config("sweep.trials", "must be at least 1"));
        }
        for c in self.points() {
            c.validate()?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<FilterbankConfig> {
        self.values.iter().map(|&v| self.parameter.apply(&self.base, v)).collect()
    }
}

/// The filter-count, top-frequency and Q sweeps around the typical bank: 15 + 15 + 17 points.
pub fn default_sweeps() -> Vec<SweepSpec> {
    let n = [1, 2, 4, 6, 8, 10, 12, 14, 16, 20, 24, 28, 32, 48, 64].map(f64::from);
    let f_khz = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 16.0, 20.0];
    let q = [0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 60.0];
    vec![
        SweepSpec::new(SweepParam::NFilters, n.to_vec()),
        SweepSpec::new(SweepParam::FMax, f_khz.iter().map(|k| k * 1000.0).collect()),
        SweepSpec::new(SweepParam::Q, q.to_vec()),
    ]
}
