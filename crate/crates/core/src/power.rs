//! First-order relative power of a filterbank.
//!
//! Filterbank power scales linearly with each of the filter count, the top
//! center frequency and the quality factor when the other two are held fixed,
//! so the relative estimate is their product. Only ratios are meaningful.

use crate::error::Result;
use crate::filterbank::FilterbankConfig;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerEstimate {
    pub relative_units: f64,
}

pub fn relative_power(config: &FilterbankConfig) -> Result<PowerEstimate> {
    config.validate()?;
    Ok(PowerEstimate {
        relative_units: config.n_filters as f64 * config.f_max_hz * config.q_filter,
    })
}

/// Power of `a` relative to `b`.
pub fn power_ratio(a: &FilterbankConfig, b: &FilterbankConfig) -> Result<f64> {
    Ok(relative_power(a)?.relative_units / relative_power(b)?.relative_units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn typical_units_and_ratio() {
        let t = FilterbankConfig::typical();
        assert_eq!(relative_power(&t).unwrap().relative_units, 1_344_000.0);
        let r = power_ratio(&t, &FilterbankConfig::tiny()).unwrap();
        assert!((r - 33.6).abs() < 1e-9);
        assert_eq!(power_ratio(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn unit_config_and_doubling() {
        let unit = FilterbankConfig {
            f_min_hz: 1.0,
            ..FilterbankConfig::new(1, 1.0, 1.0)
        };
        assert_eq!(relative_power(&unit).unwrap().relative_units, 1.0);
        let mut doubled = FilterbankConfig::typical();
        doubled.n_filters *= 2;
        assert_eq!(power_ratio(&doubled, &FilterbankConfig::typical()).unwrap(), 2.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(relative_power(&FilterbankConfig::new(0, 7000.0, 8.0)).is_err());
    }

    fn arb_config() -> impl Strategy<Value = FilterbankConfig> {
        (1usize..128, 200.0f64..20_000.0, 0.1f64..100.0).prop_map(|(n, f, q)| FilterbankConfig::new(n, f, q))
    }

    proptest! {
        #[test]
        fn ratios_are_multiplicative(a in arb_config(), b in arb_config(), c in arb_config()) {
            let ac = power_ratio(&a, &c).unwrap();
            let abc = power_ratio(&a, &b).unwrap() * power_ratio(&b, &c).unwrap();
            prop_assert!((ac - abc).abs() <= 1e-12 * ac);
            let back = power_ratio(&a, &b).unwrap() * power_ratio(&b, &a).unwrap();
            prop_assert!((back - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn one_parameter_scales_exactly(a in arb_config(), alpha in 1.0f64..8.0) {
            let mut q = a;
            q.q_filter *= alpha;
            prop_assert!((power_ratio(&q, &a).unwrap() / alpha - 1.0).abs() <= 1e-12);
            let mut f = a;
            f.f_max_hz *= alpha;
            prop_assert!((power_ratio(&f, &a).unwrap() / alpha - 1.0).abs() <= 1e-12);
        }
    }
}
