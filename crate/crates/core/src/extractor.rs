//! Filterbank + envelope bank composed into a log-power spectrogram, plus
//! per-channel standardization.

use std::io::{Read, Write};

use crate::dataset::Waveform;
use crate::envelope::{envelope_into, EnvelopeConfig};
use crate::error::{Error, Result};
use crate::filterbank::{filter_into, FilterbankDesign};
use crate::scalar::Scalar;

/// Additive floor inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-8;

/// Floor for per-channel standard deviations.
pub const STD_FLOOR: f64 = 1e-6;

/// Bumped whenever extraction output changes; part of the feature-cache key.
pub const EXTRACTOR_VERSION: u32 = 1;

pub const AFBS_MAGIC: &[u8; 4] = b"AFBS";
pub const AFBS_VERSION: u32 = 1;

/// `[n_channels x n_frames]` matrix stored row-major (one row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub values: Vec<T>,
    pub n_channels: usize,
    pub n_frames: usize,
    pub channel_centers_hz: Vec<f64>,
    pub frame_hop_ms: f64,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn from_values(n_channels: usize, n_frames: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_channels * n_frames {
            return Err(Error::Argument(format!(
                "{} values do not fill a {n_channels}x{n_frames} matrix",
                values.len()
            )));
        }
        Ok(Self {
            values,
            n_channels,
            n_frames,
            channel_centers_hz: Vec::new(),
            frame_hop_ms: 0.0,
        })
    }

    pub fn row(&self, channel: usize) -> &[T] {
        &self.values[channel * self.n_frames..(channel + 1) * self.n_frames]
    }

    pub fn get(&self, channel: usize, frame: usize) -> T {
        self.values[channel * self.n_frames + frame]
    }

    pub fn cast<U: Scalar>(&self) -> Spectrogram<U> {
        Spectrogram {
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            n_channels: self.n_channels,
            n_frames: self.n_frames,
            channel_centers_hz: self.channel_centers_hz.clone(),
            frame_hop_ms: self.frame_hop_ms,
        }
    }

    /// Serializes as `AFBS` + version + dims (u32 LE) + row-major f32 LE values.
    pub fn write_afbs<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(16 + 4 * self.values.len());
        buf.extend_from_slice(AFBS_MAGIC);
        buf.extend_from_slice(&AFBS_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n_channels as u32).to_le_bytes());
        buf.extend_from_slice(&(self.n_frames as u32).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
        }
        out.write_all(&buf)
    }

    /// Reads one `AFBS` record. Channel centers and hop are not stored and come back empty.
    pub fn read_afbs<R: Read>(mut input: R) -> Result<Self> {
        let bad = |m: String| Error::Parse {
            path: "<afbs>".into(),
            message: m,
        };
        let mut header = [0u8; 16];
        input
            .read_exact(&mut header)
            .map_err(|e| bad(format!("truncated header: {e}")))?;
        if &header[0..4] != AFBS_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        if word(4) != AFBS_VERSION {
            return Err(bad(format!("unsupported version {}", word(4))));
        }
        let (n_channels, n_frames) = (word(8) as usize, word(12) as usize);
        let len = n_channels
            .checked_mul(n_frames)
            .ok_or_else(|| bad("dimension overflow".into()))?;
        let mut raw = vec![0u8; len * 4];
        input
            .read_exact(&mut raw)
            .map_err(|e| bad(format!("truncated body: {e}")))?;
        let values = raw
            .chunks_exact(4)
            .map(|b| T::lit(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
            .collect();
        Self::from_values(n_channels, n_frames, values)
    }
}

/// Runs a clip through every channel and envelope detector:
/// row `k` is `ln(power_k + 1e-8)`. Inactive channels yield the constant floor row.
pub fn extract_spectrogram<T: Scalar>(
    fb: &FilterbankDesign<T>,
    env: &EnvelopeConfig,
    clip: &Waveform<T>,
) -> Result<Spectrogram<T>> {
    let fs = clip.sample_rate_hz as f64;
    if fs != fb.config.sample_rate_hz {
        return Err(Error::config(
            "sample_rate_hz",
            format!("clip is {fs} Hz, filterbank expects {} Hz", fb.config.sample_rate_hz),
        ));
    }
    if fs != env.sample_rate_hz {
        return Err(Error::config(
            "sample_rate_hz",
            format!("clip is {fs} Hz, envelope expects {} Hz", env.sample_rate_hz),
        ));
    }
    let n_frames = crate::envelope::frame_count(clip.samples.len(), env)?;
    let (window, hop) = env.frame_geometry()?;
    if let Some(i) = clip.samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }

    let floor = T::lit(LOG_FLOOR);
    let mut values = Vec::with_capacity(fb.n_channels() * n_frames);
    let mut scratch = vec![T::zero(); clip.samples.len()];
    for ch in &fb.channels {
        if ch.active {
            filter_into(ch, &clip.samples, &mut scratch);
            envelope_into(&scratch, window, hop, n_frames, |p| values.push((p + floor).ln()));
        } else {
            values.extend(std::iter::repeat_n(floor.ln(), n_frames));
        }
    }
    Ok(Spectrogram {
        values,
        n_channels: fb.n_channels(),
        n_frames,
        channel_centers_hz: fb.centers_hz.clone(),
        frame_hop_ms: env.hop_ms,
    })
}

/// Per-channel mean and standard deviation of training features.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Normalizer<T> {
    pub fn n_channels(&self) -> usize {
        self.mean.len()
    }

    /// Packs the statistics as a `[n_channels x 2]` spectrogram (mean, std) for storage.
    pub fn to_spectrogram(&self) -> Spectrogram<T> {
        let values = self.mean.iter().zip(&self.std).flat_map(|(m, s)| [*m, *s]).collect();
        Spectrogram::from_values(self.n_channels(), 2, values).expect("shape")
    }

    pub fn from_spectrogram(s: &Spectrogram<T>) -> Result<Self> {
        if s.n_frames != 2 {
            return Err(Error::Argument(format!(
                "normalizer record must have 2 columns, found {}",
                s.n_frames
            )));
        }
        Ok(Self {
            mean: (0..s.n_channels).map(|k| s.get(k, 0)).collect(),
            std: (0..s.n_channels).map(|k| s.get(k, 1)).collect(),
        })
    }
}

/// Two-pass population mean/variance per channel over every frame of every
/// spectrogram, accumulated in double precision.
pub fn fit_normalizer<'a, T: Scalar>(
    spectrograms: impl IntoIterator<Item = &'a Spectrogram<T>> + Clone,
) -> Result<Normalizer<T>> {
    let mut iter = spectrograms.clone().into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Argument("cannot fit a normalizer on an empty collection".into()))?;
    let n_channels = first.n_channels;
    let mut sum = vec![0.0f64; n_channels];
    let mut count = 0usize;
    for s in spectrograms.clone() {
        if s.n_channels != n_channels {
            return Err(Error::Argument(format!(
                "channel count mismatch: {} vs {n_channels}",
                s.n_channels
            )));
        }
        for (k, acc) in sum.iter_mut().enumerate() {
            *acc += s.row(k).iter().map(|v| v.to_f64_lossy()).sum::<f64>();
        }
        count += s.n_frames;
    }
    if count == 0 {
        return Err(Error::Argument("spectrograms contain no frames".into()));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0f64; n_channels];
    for s in spectrograms {
        for (k, acc) in sq.iter_mut().enumerate() {
            let m = mean[k];
            *acc += s
                .row(k)
                .iter()
                .map(|v| {
                    let d = v.to_f64_lossy() - m;
                    d * d
                })
                .sum::<f64>();
        }
    }
    Ok(Normalizer {
        mean: mean.iter().map(|&m| T::lit(m)).collect(),
        std: sq
            .iter()
            .map(|&s| T::lit((s / count as f64).sqrt().max(STD_FLOOR)))
            .collect(),
    })
}

/// `(value - mean) / std` per channel.
pub fn normalize<T: Scalar>(s: &Spectrogram<T>, n: &Normalizer<T>) -> Result<Spectrogram<T>> {
    if s.n_channels != n.n_channels() {
        return Err(Error::Argument(format!(
            "spectrogram has {} channels, normalizer {}",
            s.n_channels,
            n.n_channels()
        )));
    }
    let mut out = s.clone();
    for k in 0..s.n_channels {
        let (m, sd) = (n.mean[k], n.std[k]);
        for v in &mut out.values[k * s.n_frames..(k + 1) * s.n_frames] {
            *v = (*v - m) / sd;
        }
    }
    Ok(out)
}
