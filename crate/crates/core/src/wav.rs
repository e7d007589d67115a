//! Minimal RIFF/WAVE codec for 16-bit PCM.

use std::fmt;

/// Format fields of a decoded `fmt ` chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavFormat {
    pub format_tag: u16,
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
}

impl WavFormat {
    pub fn is_pcm16_mono(&self, sample_rate: u32) -> bool {
        self.format_tag == FORMAT_PCM
            && self.channels == 1
            && self.bits_per_sample == 16
            && self.sample_rate == sample_rate
    }
}

impl fmt::Display for WavFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "format tag {}, {} channel(s), {} Hz, {} bits",
            self.format_tag, self.channels, self.sample_rate, self.bits_per_sample
        )
    }
}

pub const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// A parsed file: its format and the raw interleaved data chunk.
#[derive(Debug, Clone)]
pub struct WavFile<'a> {
    pub format: WavFormat,
    pub data: &'a [u8],
}

impl WavFile<'_> {
    /// Interleaved 16-bit samples; only meaningful when `bits_per_sample == 16`.
    pub fn pcm16_samples(&self) -> Vec<i16> {
        self.data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect()
    }
}

/// Splits a RIFF/WAVE byte stream into its format and data chunks.
pub fn parse(bytes: &[u8]) -> Result<WavFile<'_>, String> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err("missing RIFF/WAVE signature".into());
    }
    let mut pos = 12;
    let mut format = None;
    let mut data = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        // A truncated data chunk is tolerated: recorders often leave the size unpatched.
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(format!("fmt chunk is {} bytes, need 16", body.len()));
                }
                let u16_at = |o: usize| u16::from_le_bytes([body[o], body[o + 1]]);
                let mut format_tag = u16_at(0);
                if format_tag == FORMAT_EXTENSIBLE && body.len() >= 26 {
                    format_tag = u16_at(24);
                }
                format = Some(WavFormat {
                    format_tag,
                    channels: u16_at(2),
                    sample_rate: u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    bits_per_sample: u16_at(14),
                });
            }
            b"data" => {
                data = Some(body);
            }
            _ => {}
        }
        if data.is_some() && format.is_some() {
            break;
        }
        pos = body_start.saturating_add(size + (size & 1));
    }
    match (format, data) {
        (Some(format), Some(data)) => Ok(WavFile { format, data }),
        (None, _) => Err("no fmt chunk".into()),
        (_, None) => Err("no data chunk".into()),
    }
}

/// Encodes mono 16-bit PCM as a canonical 44-byte-header WAVE file.
pub fn encode_pcm16_mono(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// General PCM encoder used to produce files the loader must reject.
pub fn encode_pcm16(samples: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let mut out = encode_pcm16_mono(samples, sample_rate);
    out[22..24].copy_from_slice(&channels.to_le_bytes());
    out[28..32].copy_from_slice(&(sample_rate * 2 * channels as u32).to_le_bytes());
    out[32..34].copy_from_slice(&(2 * channels).to_le_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_mono() {
        let samples = [0i16, 1, -1, i16::MIN, i16::MAX, 1234];
        let bytes = encode_pcm16_mono(&samples, 16000);
        assert_eq!(bytes.len(), 44 + 12);
        let wav = parse(&bytes).unwrap();
        assert!(wav.format.is_pcm16_mono(16000));
        assert_eq!(wav.pcm16_samples(), samples);
    }

    #[test]
    fn skips_unknown_chunks() {
        let base = encode_pcm16_mono(&[5, 6], 16000);
        let mut bytes = base[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]); // odd size, padded
        bytes.extend_from_slice(&base[12..]);
        assert_eq!(parse(&bytes).unwrap().pcm16_samples(), vec![5, 6]);
    }

    #[test]
    fn corrupt_headers() {
        assert!(parse(b"RIFX\0\0\0\0WAVE").is_err());
        assert!(parse(b"RIFF").is_err());
        let bytes = encode_pcm16_mono(&[1, 2], 16000);
        assert!(parse(&bytes[..36]).is_err());
    }
}
