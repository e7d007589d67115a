use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Quantile of Student's t distribution with `dof` degrees of freedom.
pub fn student_t_quantile(p: f64, dof: f64) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Argument(format!("t distribution: {e}")))?;
    Ok(t.inverse_cdf(p))
}

/// Two-sided t interval `mean ± t(1 - a/2, n - 1) * s / sqrt(n)` with the sample
/// standard deviation `s`.
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Argument(format!("confidence interval needs at least 2 values, got {n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("confidence level {level} outside (0, 1)")));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok((values[0], values[0]));
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = student_t_quantile(1.0 - (1.0 - level) / 2.0, (n - 1) as f64)?;
    let half = t * var.sqrt() / (n as f64).sqrt();
    Ok((m - half, m + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference quantiles and intervals from scipy.stats.t.
    #[test]
    fn quantiles_match_reference() {
        for (dof, want) in [
            (1.0, 12.706204736432095),
            (2.0, 4.302652729696142),
            (3.0, 3.182446305284263),
            (4.0, 2.7764451051977987),
        ] {
            let got = student_t_quantile(0.975, dof).unwrap();
            assert!((got - want).abs() < 1e-6, "dof {dof}: {got}");
        }
    }

    #[test]
    fn three_trial_interval() {
        let (lo, hi) = confidence_interval(&[90.0, 91.0, 92.0], 0.95).unwrap();
        assert!((lo - 88.51586228828046).abs() < 1e-6);
        assert!((hi - 93.48413771171954).abs() < 1e-6);
        let (lo, hi) = confidence_interval(&[0.81, 0.86, 0.84, 0.9, 0.79], 0.95).unwrap();
        assert!((lo - 0.7865940120753727).abs() < 1e-8);
        assert!((hi - 0.893405987924627).abs() < 1e-8);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(confidence_interval(&[0.7, 0.7, 0.7], 0.95).unwrap(), (0.7, 0.7));
        assert!(matches!(confidence_interval(&[0.7], 0.95), Err(Error::Argument(_))));
        assert!(confidence_interval(&[0.7, 0.8], 1.0).is_err());
    }
}
