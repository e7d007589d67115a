//! Bank of second-order bandpass filters.
//!
//! Center frequencies follow a geometric progression anchored at the top
//! (`f_max`) and bottom (`f_min`) of the bank. Every channel shares one quality
//! factor. Channels are discretized with the bilinear transform, prewarped so
//! that both the center frequency and the −3 dB bandwidth of the discrete
//! filter land where the analog prototype puts them.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Channels whose center is at or above this fraction of Nyquist are inactive.
pub const NYQUIST_CLAMP: f64 = 0.95;

/// Widest realizable −3 dB bandwidth, as a fraction of Nyquist.
pub const MAX_BANDWIDTH_FRACTION: f64 = 0.98;

pub const DEFAULT_F_MIN_HZ: f64 = 100.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 16_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterbankConfig {
    pub n_filters: usize,
    /// Center of the highest filter.
    pub f_max_hz: f64,
    pub q_filter: f64,
    /// Center of the lowest filter.
    pub f_min_hz: f64,
    pub sample_rate_hz: f64,
}

impl FilterbankConfig {
    pub fn new(n_filters: usize, f_max_hz: f64, q_filter: f64) -> Self {
        Self {
            n_filters,
            f_max_hz,
            q_filter,
            f_min_hz: DEFAULT_F_MIN_HZ,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }

    /// Average of recent analog feature-extractor chips: 24 filters, 7 kHz, Q = 8.
    pub fn typical() -> Self {
        Self::new(24, 7_000.0, 8.0)
    }

    /// Reduced-power bank: 10 filters, 2 kHz, Q = 2.
    pub fn tiny() -> Self {
        Self::new(10, 2_000.0, 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_filters == 0 {
            return Err(Error::config("n_filters", "must be at least 1"));
        }
        for (key, v) in [
            ("f_max_hz", self.f_max_hz),
            ("q_filter", self.q_filter),
            ("f_min_hz", self.f_min_hz),
            ("sample_rate_hz", self.sample_rate_hz),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(key, format!("must be finite and positive, got {v}")));
            }
        }
        if self.f_min_hz > self.f_max_hz {
            return Err(Error::config(
                "f_min_hz",
                format!("{} Hz exceeds f_max_hz {} Hz", self.f_min_hz, self.f_max_hz),
            ));
        }
        if self.n_filters >= 2 && self.f_min_hz == self.f_max_hz {
            return Err(Error::config(
                "f_max_hz",
                "must exceed f_min_hz when more than one filter is requested",
            ));
        }
        Ok(())
    }
}

/// Normalized biquad: `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs<T> {
    pub b0: T,
    pub b1: T,
    pub b2: T,
    pub a1: T,
    pub a2: T,
    pub f_c_hz: f64,
    /// False when the center sits above the Nyquist clamp; all taps are then zero.
    pub active: bool,
}

impl<T: Scalar> BiquadCoeffs<T> {
    pub fn inactive(f_c_hz: f64) -> Self {
        Self {
            b0: T::zero(),
            b1: T::zero(),
            b2: T::zero(),
            a1: T::zero(),
            a2: T::zero(),
            f_c_hz,
            active: false,
        }
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex<f64>; 2] {
        let a1 = self.a1.to_f64_lossy();
        let a2 = self.a2.to_f64_lossy();
        let disc = Complex::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterbankDesign<T> {
    pub config: FilterbankConfig,
    pub centers_hz: Vec<f64>,
    pub channels: Vec<BiquadCoeffs<T>>,
}

impl<T: Scalar> FilterbankDesign<T> {
    pub fn new(config: FilterbankConfig) -> Result<Self> {
        let centers_hz = center_frequencies(&config)?;
        let channels = centers_hz
            .iter()
            .map(|&fc| design_bandpass(fc, config.q_filter, config.sample_rate_hz))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            centers_hz,
            channels,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_active(&self) -> usize {
        self.channels.iter().filter(|c| c.active).count()
    }
}

/// Geometric progression of centers, `f_k = f_max * r^(k - (N-1))` with
/// `r = (f_max / f_min)^(1/(N-1))`. A single filter sits at `f_max`.
pub fn center_frequencies(config: &FilterbankConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = config.n_filters;
    if n == 1 {
        return Ok(vec![config.f_max_hz]);
    }
    let ratio = (config.f_max_hz / config.f_min_hz).powf(1.0 / (n - 1) as f64);
    let top = (n - 1) as i32;
    let mut centers: Vec<f64> = (0..n)
        .map(|k| config.f_max_hz * ratio.powi(k as i32 - top))
        .collect();
    // The endpoints are pinned to the configured values.
    centers[0] = config.f_min_hz;
    centers[n - 1] = config.f_max_hz;
    Ok(centers)
}

/// Unity-peak-gain second-order bandpass at `f_c_hz` with quality factor `q`.
///
/// The analog prototype `(w0/Q) s / (s^2 + (w0/Q) s + w0^2)` is mapped with the
/// bilinear transform. The center is prewarped, and the prototype bandwidth is
/// prewarped as well so that the discrete −3 dB edges are exactly `f_c / q`
/// apart. Their geometric mean, measured on the warped axis, stays at `f_c`.
/// Bandwidths wider than [`MAX_BANDWIDTH_FRACTION`] of Nyquist are clamped
/// to that width.
pub fn design_bandpass<T: Scalar>(f_c_hz: f64, q: f64, sample_rate_hz: f64) -> Result<BiquadCoeffs<T>> {
    for (key, v) in [("f_c_hz", f_c_hz), ("q", q), ("sample_rate_hz", sample_rate_hz)] {
        if !v.is_finite() {
            return Err(Error::config(key, format!("must be finite, got {v}")));
        }
        if v <= 0.0 {
            return Err(Error::config(key, format!("must be positive, got {v}")));
        }
    }
    let nyquist = sample_rate_hz / 2.0;
    if f_c_hz >= NYQUIST_CLAMP * nyquist {
        return Ok(BiquadCoeffs::inactive(f_c_hz));
    }

    let w0 = 2.0 * std::f64::consts::PI * f_c_hz / sample_rate_hz;
    // Half the digital bandwidth in radians; edges satisfy tan(wh/2) tan(wl/2) = tan^2(w0/2).
    let half_bw = (w0 / (2.0 * q)).min(MAX_BANDWIDTH_FRACTION * std::f64::consts::FRAC_PI_2);
    let alpha = half_bw.tan();
    let a0 = 1.0 + alpha;
    Ok(BiquadCoeffs {
        b0: T::lit(alpha / a0),
        b1: T::zero(),
        b2: T::lit(-alpha / a0),
        a1: T::lit(-2.0 * w0.cos() / a0),
        a2: T::lit((1.0 - alpha) / a0),
        f_c_hz,
        active: true,
    })
}

/// Transfer function evaluated on the unit circle at `f_hz`.
pub fn frequency_response<T: Scalar>(
    coeffs: &BiquadCoeffs<T>,
    f_hz: f64,
    sample_rate_hz: f64,
) -> Result<Complex<f64>> {
    if !(f_hz.is_finite() && f_hz >= 0.0 && f_hz <= sample_rate_hz / 2.0) {
        return Err(Error::Argument(format!(
            "frequency {f_hz} Hz outside [0, {}] Hz",
            sample_rate_hz / 2.0
        )));
    }
    if !coeffs.active {
        return Ok(Complex::new(0.0, 0.0));
    }
    let w = 2.0 * std::f64::consts::PI * f_hz / sample_rate_hz;
    let z1 = Complex::from_polar(1.0, -w);
    let z2 = z1 * z1;
    let num = coeffs.b0.to_f64_lossy() + z1 * coeffs.b1.to_f64_lossy() + z2 * coeffs.b2.to_f64_lossy();
    let den = 1.0 + z1 * coeffs.a1.to_f64_lossy() + z2 * coeffs.a2.to_f64_lossy();
    Ok(num / den)
}

/// −3 dB edges of an active channel, located by bisection on the magnitude response.
pub fn half_power_edges<T: Scalar>(coeffs: &BiquadCoeffs<T>, sample_rate_hz: f64) -> Option<(f64, f64)> {
    if !coeffs.active {
        return None;
    }
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let mag = |f: f64| {
        frequency_response(coeffs, f, sample_rate_hz)
            .map(|h| h.norm())
            .unwrap_or(0.0)
    };
    let fc = coeffs.f_c_hz;
    let bisect = |mut below: f64, mut above: f64| {
        // `below` is outside the passband, `above` inside.
        for _ in 0..200 {
            let mid = 0.5 * (below + above);
            if mag(mid) >= target {
                above = mid;
            } else {
                below = mid;
            }
        }
        0.5 * (below + above)
    };
    let lo = bisect(0.0, fc);
    let hi = bisect(sample_rate_hz / 2.0, fc);
    Some((lo, hi))
}

/// Center frequency divided by the measured −3 dB bandwidth.
pub fn measured_q<T: Scalar>(coeffs: &BiquadCoeffs<T>, sample_rate_hz: f64) -> Option<f64> {
    half_power_edges(coeffs, sample_rate_hz).map(|(lo, hi)| coeffs.f_c_hz / (hi - lo))
}

/// Runs one channel over a waveform starting from zero state.
pub fn filter_signal<T: Scalar>(coeffs: &BiquadCoeffs<T>, samples: &[T]) -> Result<Vec<T>> {
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut out = vec![T::zero(); samples.len()];
    if !coeffs.active {
        return Ok(out);
    }
    filter_into(coeffs, samples, &mut out);
    Ok(out)
}

/// Transposed direct form II recursion; `out` must match `input` in length.
pub(crate) fn filter_into<T: Scalar>(c: &BiquadCoeffs<T>, input: &[T], out: &mut [T]) {
    let (b0, b1, b2, a1, a2) = (c.b0, c.b1, c.b2, c.a1, c.a2);
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    for (x, y) in input.iter().zip(out.iter_mut()) {
        let v = b0 * *x + s1;
        s1 = b1 * *x - a1 * v + s2;
        s2 = b2 * *x - a2 * v;
        *y = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, f_min: f64, f_max: f64) -> FilterbankConfig {
        FilterbankConfig {
            f_min_hz: f_min,
            ..FilterbankConfig::new(n, f_max, 8.0)
        }
    }

    #[test]
    fn typical_centers_match_high_precision_progression() {
        let c = center_frequencies(&cfg(24, 100.0, 7000.0)).unwrap();
        assert_eq!(c.len(), 24);
        assert_eq!(c[0], 100.0);
        assert_eq!(c[23], 7000.0);
        // mpmath at 40 digits: 120.28781993420153..., 144.69159624522892..., 917.61361124354010...
        assert!((c[1] - 120.287_819_934_201_54).abs() < 1e-9);
        assert!((c[2] - 144.691_596_245_228_9).abs() < 1e-9);
        assert!((c[12] - 917.613_611_243_54).abs() < 1e-9);
    }

    #[test]
    fn two_and_one_filter_banks() {
        assert_eq!(center_frequencies(&cfg(2, 100.0, 7000.0)).unwrap(), vec![100.0, 7000.0]);
        assert_eq!(center_frequencies(&cfg(1, 100.0, 2000.0)).unwrap(), vec![2000.0]);
    }

    #[test]
    fn invalid_configs_name_the_key() {
        match center_frequencies(&cfg(0, 100.0, 7000.0)) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "n_filters"),
            other => panic!("{other:?}"),
        }
        match center_frequencies(&cfg(4, 8000.0, 7000.0)) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "f_min_hz"),
            other => panic!("{other:?}"),
        }
        assert!(center_frequencies(&cfg(4, 100.0, 100.0)).is_err());
        assert!(center_frequencies(&cfg(1, 100.0, 100.0)).is_ok());
    }

    #[test]
    fn unity_gain_at_center_and_zeros_at_band_edges() {
        let c: BiquadCoeffs<f64> = design_bandpass(1000.0, 8.0, 16000.0).unwrap();
        assert!(c.active);
        let peak = frequency_response(&c, 1000.0, 16000.0).unwrap().norm();
        assert!((peak - 1.0).abs() < 1e-12);
        assert!(frequency_response(&c, 0.0, 16000.0).unwrap().norm() < 1e-12);
        assert!(frequency_response(&c, 8000.0, 16000.0).unwrap().norm() < 1e-12);
        assert!(c.is_stable());
    }

    #[test]
    fn above_clamp_is_inactive() {
        let c: BiquadCoeffs<f64> = design_bandpass(9000.0, 8.0, 16000.0).unwrap();
        assert!(!c.active);
        assert_eq!((c.b0, c.b1, c.b2, c.a1, c.a2), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(frequency_response(&c, 1234.0, 16000.0).unwrap().norm(), 0.0);
        let y = filter_signal(&c, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.0; 3]);
        // 7600 Hz is exactly the clamp.
        assert!(!design_bandpass::<f64>(7600.0, 8.0, 16000.0).unwrap().active);
        assert!(design_bandpass::<f64>(7599.0, 8.0, 16000.0).unwrap().active);
    }

    #[test]
    fn rejects_non_finite_design_inputs() {
        assert!(design_bandpass::<f64>(f64::NAN, 8.0, 16000.0).is_err());
        assert!(design_bandpass::<f64>(1000.0, f64::INFINITY, 16000.0).is_err());
        assert!(design_bandpass::<f64>(1000.0, 0.0, 16000.0).is_err());
    }

    #[test]
    fn half_power_edges_match_analog_prototype() {
        // Analog edges solve f_hi - f_lo = f0/Q, f_hi f_lo = f0^2:
        // 780.7764064044151 and 1280.7764064044151 Hz.
        let c: BiquadCoeffs<f64> = design_bandpass(1000.0, 2.0, 16000.0).unwrap();
        let (lo, hi) = half_power_edges(&c, 16000.0).unwrap();
        assert!((lo / 780.776_406_404_415 - 1.0).abs() < 0.02, "lo {lo}");
        assert!((hi / 1_280.776_406_404_415 - 1.0).abs() < 0.02, "hi {hi}");
    }

    #[test]
    fn frequency_out_of_range_is_an_argument_error() {
        let c: BiquadCoeffs<f64> = design_bandpass(1000.0, 2.0, 16000.0).unwrap();
        assert!(matches!(frequency_response(&c, 8000.1, 16000.0), Err(Error::Argument(_))));
        assert!(matches!(frequency_response(&c, -1.0, 16000.0), Err(Error::Argument(_))));
    }

    #[test]
    fn steady_state_sinusoid_at_center_has_unit_amplitude() {
        let fs = 16000.0;
        let c: BiquadCoeffs<f64> = design_bandpass(1000.0, 8.0, fs).unwrap();
        let x: Vec<f64> = (0..16000)
            .map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / fs).sin())
            .collect();
        let y = filter_signal(&c, &x).unwrap();
        let tail = &y[12000..];
        let amp = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((amp - 1.0).abs() < 0.01, "amp {amp}");
    }

    #[test]
    fn dc_input_decays() {
        let c: BiquadCoeffs<f64> = design_bandpass(1000.0, 8.0, 16000.0).unwrap();
        let y = filter_signal(&c, &vec![1.0; 16000]).unwrap();
        let tail: f64 = y[y.len() - 100..].iter().map(|v| v.abs()).sum::<f64>() / 100.0;
        assert!(tail < 1e-3, "tail {tail}");
    }

    #[test]
    fn zero_in_zero_out_and_nan_detection() {
        let c: BiquadCoeffs<f32> = design_bandpass(500.0, 4.0, 16000.0).unwrap();
        assert_eq!(filter_signal(&c, &[0.0f32; 257]).unwrap(), vec![0.0f32; 257]);
        assert!(matches!(filter_signal(&c, &[0.0, f32::NAN]), Err(Error::NonFinite(1))));
    }

    #[test]
    fn design_is_deterministic() {
        let a = FilterbankDesign::<f32>::new(FilterbankConfig::typical()).unwrap();
        let b = FilterbankDesign::<f32>::new(FilterbankConfig::typical()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_active(), 24);
    }
}
