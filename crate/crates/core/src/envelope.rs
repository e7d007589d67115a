//! Short-time average-power envelope detection.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub sample_rate_hz: f64,
}

impl Default for EnvelopeConfig {
    /// 20 ms windows advanced by 10 ms at 16 kHz.
    fn default() -> Self {
        Self {
            window_ms: 20.0,
            hop_ms: 10.0,
            sample_rate_hz: 16_000.0,
        }
    }
}

impl EnvelopeConfig {
    /// Window and hop lengths in samples.
    pub fn frame_geometry(&self) -> Result<(usize, usize)> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::config("sample_rate_hz", "must be finite and positive"));
        }
        if !(self.hop_ms.is_finite() && self.hop_ms > 0.0) {
            return Err(Error::config("hop_ms", "must be finite and positive"));
        }
        if !(self.window_ms.is_finite() && self.hop_ms <= self.window_ms) {
            return Err(Error::config("window_ms", "must be finite and at least hop_ms"));
        }
        let window = to_samples(self.window_ms, self.sample_rate_hz)
            .ok_or_else(|| Error::config("window_ms", "must span a whole number of samples"))?;
        let hop = to_samples(self.hop_ms, self.sample_rate_hz)
            .ok_or_else(|| Error::config("hop_ms", "must span a whole number of samples"))?;
        Ok((window, hop))
    }
}

fn to_samples(ms: f64, sample_rate_hz: f64) -> Option<usize> {
    let n = ms * sample_rate_hz / 1000.0;
    let rounded = n.round();
    ((n - rounded).abs() < 1e-9 && rounded >= 1.0).then_some(rounded as usize)
}

/// `floor((n - W) / H) + 1` full windows; trailing partial windows are dropped.
pub fn frame_count(n_samples: usize, config: &EnvelopeConfig) -> Result<usize> {
    let (window, hop) = config.frame_geometry()?;
    if n_samples < window {
        return Err(Error::InputTooShort {
            got: n_samples,
            need: window,
        });
    }
    Ok((n_samples - window) / hop + 1)
}

/// Mean of squared samples over each rectangular window.
pub fn detect_envelope<T: Scalar>(channel: &[T], config: &EnvelopeConfig) -> Result<Vec<T>> {
    let frames = frame_count(channel.len(), config)?;
    let (window, hop) = config.frame_geometry()?;
    let mut out = Vec::with_capacity(frames);
    envelope_into(channel, window, hop, frames, |p| out.push(p));
    Ok(out)
}

pub(crate) fn envelope_into<T: Scalar>(
    channel: &[T],
    window: usize,
    hop: usize,
    frames: usize,
    mut sink: impl FnMut(T),
) {
    let len = T::lit(window as f64);
    for f in 0..frames {
        let start = f * hop;
        let energy: T = channel[start..start + window].iter().map(|&x| x * x).sum();
        sink(energy / len);
    }
}
