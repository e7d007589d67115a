//! Synthetic stand-in for the Speech Commands corpus.
//!
//! Each of the 35 words is spelled as a phoneme string and rendered with a
//! source-filter model: a glottal pulse train through three time-varying
//! formant resonators for voiced sounds, and band-shaped noise for fricatives,
//! bursts and aspiration. Every clip draws a fresh speaker (pitch, vocal-tract
//! scale, tempo, loudness, onset, background noise), so classes overlap the way
//! real recordings do. Vowel formants sit below 3 kHz and fricative energy
//! above it, roughly following the spectral layout of English speech.
//!
//! The files land in `<root>/<word>/*.wav` as 16-bit mono 16 kHz PCM, which is
//! the layout [`crate::dataset::build_splits`] expects.

use std::fs;
use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{CLIP_SAMPLES, KEYWORDS, SAMPLE_RATE_HZ, UNKNOWN_WORDS};
use crate::error::{Error, Result};
use crate::filterbank::{design_bandpass, filter_signal};
use crate::seed;
use crate::wav;

const FS: f64 = SAMPLE_RATE_HZ as f64;

/// One acoustic segment of an utterance.
#[derive(Debug, Clone, Copy)]
struct Segment {
    dur_ms: f64,
    voice: f64,
    /// Formant targets at segment start and end.
    formants: [[f64; 3]; 2],
    noise: f64,
    noise_fc: f64,
    noise_bw: f64,
}

const IY: [f64; 3] = [270.0, 2290.0, 3010.0];
const IH: [f64; 3] = [390.0, 1990.0, 2550.0];
const EH: [f64; 3] = [530.0, 1840.0, 2480.0];
const AE: [f64; 3] = [660.0, 1720.0, 2410.0];
const AA: [f64; 3] = [730.0, 1090.0, 2440.0];
const AO: [f64; 3] = [570.0, 840.0, 2410.0];
const AH: [f64; 3] = [640.0, 1190.0, 2390.0];
const UW: [f64; 3] = [300.0, 870.0, 2240.0];
const ER: [f64; 3] = [490.0, 1350.0, 1690.0];
const NEUTRAL: [f64; 3] = [500.0, 1500.0, 2500.0];

fn vowel(f: [f64; 3]) -> Vec<Segment> {
    vec![glide(f, f, 150.0, 1.0)]
}

fn diphthong(a: [f64; 3], b: [f64; 3]) -> Vec<Segment> {
    vec![glide(a, b, 220.0, 1.0)]
}

fn glide(a: [f64; 3], b: [f64; 3], dur_ms: f64, voice: f64) -> Segment {
    Segment {
        dur_ms,
        voice,
        formants: [a, b],
        noise: 0.0,
        noise_fc: 1000.0,
        noise_bw: 1000.0,
    }
}

fn fricative(noise: f64, fc: f64, bw: f64, voice: f64, dur_ms: f64) -> Vec<Segment> {
    vec![Segment {
        dur_ms,
        voice,
        formants: [NEUTRAL, NEUTRAL],
        noise,
        noise_fc: fc,
        noise_bw: bw,
    }]
}

fn stop(fc: f64, bw: f64, voiced: bool) -> Vec<Segment> {
    let closure = Segment {
        dur_ms: 45.0,
        voice: if voiced { 0.08 } else { 0.0 },
        formants: [NEUTRAL, NEUTRAL],
        noise: 0.0,
        noise_fc: fc,
        noise_bw: bw,
    };
    let burst = Segment {
        dur_ms: 18.0,
        voice: 0.0,
        noise: 0.6,
        ..closure
    };
    let mut out = vec![closure, burst];
    if !voiced {
        out.push(Segment {
            dur_ms: 35.0,
            noise: 0.15,
            noise_fc: 1500.0,
            noise_bw: 3000.0,
            ..burst
        });
    }
    out
}

fn phone(p: &str) -> Vec<Segment> {
    match p {
        "IY" => vowel(IY),
        "IH" => vowel(IH),
        "EH" => vowel(EH),
        "AE" => vowel(AE),
        "AA" => vowel(AA),
        "AO" => vowel(AO),
        "AH" => vowel(AH),
        "UW" => vowel(UW),
        "ER" => vowel(ER),
        "EY" => diphthong(EH, IY),
        "AY" => diphthong(AA, IY),
        "AW" => diphthong(AA, UW),
        "OW" => diphthong(AO, UW),
        "W" => vec![glide([300.0, 610.0, 2200.0], [300.0, 610.0, 2200.0], 70.0, 0.8)],
        "Y" => vec![glide(IY, IY, 70.0, 0.8)],
        "L" => vec![glide([360.0, 1000.0, 2800.0], [360.0, 1000.0, 2800.0], 70.0, 0.8)],
        "R" => vec![glide([420.0, 1300.0, 1600.0], [420.0, 1300.0, 1600.0], 70.0, 0.8)],
        "M" => vec![glide([250.0, 1000.0, 2200.0], [250.0, 1000.0, 2200.0], 80.0, 0.4)],
        "N" => vec![glide([250.0, 1500.0, 2500.0], [250.0, 1500.0, 2500.0], 80.0, 0.4)],
        "S" => fricative(0.5, 5500.0, 2500.0, 0.0, 120.0),
        "SH" => fricative(0.5, 2800.0, 1500.0, 0.0, 120.0),
        "F" => fricative(0.15, 4500.0, 5000.0, 0.0, 110.0),
        "TH" => fricative(0.12, 5000.0, 5000.0, 0.0, 110.0),
        "HH" => fricative(0.2, 1500.0, 3000.0, 0.0, 70.0),
        "V" => fricative(0.12, 4500.0, 5000.0, 0.3, 80.0),
        "Z" => fricative(0.3, 5500.0, 2500.0, 0.3, 100.0),
        "ZH" => fricative(0.3, 2800.0, 1500.0, 0.3, 100.0),
        "B" => stop(700.0, 1500.0, true),
        "D" => stop(3500.0, 2500.0, true),
        "G" => stop(1800.0, 1500.0, true),
        "P" => stop(800.0, 2000.0, false),
        "T" => stop(4500.0, 3000.0, false),
        "K" => stop(2000.0, 1500.0, false),
        other => panic!("no phone model for {other}"),
    }
}

/// Phoneme spelling of each corpus word.
pub fn pronunciation(word: &str) -> Option<&'static str> {
    Some(match word {
        "yes" => "Y EH S",
        "no" => "N OW",
        "up" => "AH P",
        "down" => "D AW N",
        "left" => "L EH F T",
        "right" => "R AY T",
        "on" => "AA N",
        "off" => "AO F",
        "stop" => "S T AA P",
        "go" => "G OW",
        "backward" => "B AE K W ER D",
        "bed" => "B EH D",
        "bird" => "B ER D",
        "cat" => "K AE T",
        "dog" => "D AO G",
        "eight" => "EY T",
        "five" => "F AY V",
        "follow" => "F AA L OW",
        "forward" => "F AO R W ER D",
        "four" => "F AO R",
        "happy" => "HH AE P IY",
        "house" => "HH AW S",
        "learn" => "L ER N",
        "marvin" => "M AA R V IH N",
        "nine" => "N AY N",
        "one" => "W AH N",
        "seven" => "S EH V AH N",
        "sheila" => "SH IY L AH",
        "six" => "S IH K S",
        "three" => "TH R IY",
        "tree" => "T R IY",
        "two" => "T UW",
        "visual" => "V IH ZH UW AH L",
        "wow" => "W AW",
        "zero" => "Z IY R OW",
        _ => return None,
    })
}

/// Per-clip voice and recording conditions.
#[derive(Debug, Clone, Copy)]
pub struct Speaker {
    pub f0_hz: f64,
    pub formant_scale: f64,
    pub tempo: f64,
    pub peak: f64,
    pub background: f64,
}

impl Speaker {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            f0_hz: rng.random_range(85.0..250.0),
            formant_scale: rng.random_range(0.88..1.15),
            tempo: rng.random_range(0.8..1.25),
            peak: rng.random_range(0.05..0.6),
            background: rng.random_range(0.0005..0.005),
        }
    }
}

/// Two-pole resonator with unity DC gain.
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, f: f64, bw: f64) -> f64 {
        let c = -(-2.0 * std::f64::consts::PI * bw / FS).exp();
        let b = 2.0 * (-std::f64::consts::PI * bw / FS).exp() * (2.0 * std::f64::consts::PI * f / FS).cos();
        let a = 1.0 - b - c;
        let y = a * x + b * self.y1 + c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Renders one utterance of `word`, placed at a random onset in a one-second clip.
pub fn synthesize_word<R: Rng>(word: &str, speaker: &Speaker, rng: &mut R) -> Result<Vec<f64>> {
    let spelling = pronunciation(word).ok_or_else(|| Error::Dataset {
        word: word.to_owned(),
        message: "no synthetic pronunciation".into(),
    })?;
    let mut segments: Vec<Segment> = spelling.split_whitespace().flat_map(phone).collect();
    for s in &mut segments {
        s.dur_ms *= speaker.tempo * rng.random_range(0.85..1.15);
        for f in s.formants.iter_mut().flatten() {
            *f *= speaker.formant_scale;
        }
        let jitter = rng.random_range(0.95..1.05);
        s.formants[1][0] *= jitter;
        s.formants[1][1] *= jitter;
        s.noise_fc = (s.noise_fc * speaker.formant_scale).min(7200.0);
    }
    let total_ms: f64 = segments.iter().map(|s| s.dur_ms).sum();
    if total_ms > 900.0 {
        let k = 900.0 / total_ms;
        segments.iter_mut().for_each(|s| s.dur_ms *= k);
    }
    let lengths: Vec<usize> = segments.iter().map(|s| (s.dur_ms * FS / 1000.0) as usize).collect();
    let n: usize = lengths.iter().sum();

    // Voiced path: pulse train with declining pitch, spectral tilt, formant cascade.
    let mut voiced = vec![0.0; n];
    let mut phase = 0.0;
    let mut tilt = 0.0;
    let mut amp = 0.0;
    let mut track = segments[0].formants[0];
    let mut res = [Resonator { y1: 0.0, y2: 0.0 }, Resonator { y1: 0.0, y2: 0.0 }, Resonator { y1: 0.0, y2: 0.0 }];
    let bws = [70.0, 100.0, 160.0];
    let amp_smooth = (-1.0 / (0.008 * FS)).exp();
    let formant_smooth = (-1.0 / (0.015 * FS)).exp();
    let mut i = 0;
    for (seg, &len) in segments.iter().zip(&lengths) {
        for j in 0..len {
            let t = j as f64 / len.max(1) as f64;
            let f0 = speaker.f0_hz * (1.0 - 0.15 * i as f64 / n as f64);
            phase += f0 / FS;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            tilt = pulse + 0.9 * tilt;
            amp = seg.voice + amp_smooth * (amp - seg.voice);
            let mut y = tilt * amp;
            for k in 0..3 {
                let target = seg.formants[0][k] + t * (seg.formants[1][k] - seg.formants[0][k]);
                track[k] = target + formant_smooth * (track[k] - target);
                y = res[k].step(y, track[k], bws[k]);
            }
            voiced[i] = y;
            i += 1;
        }
    }
    let voiced_peak = voiced.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let mut utterance: Vec<f64> = voiced.iter().map(|v| v / voiced_peak).collect();

    // Noise path, rendered per segment with raised-cosine edges.
    let white = Uniform::new(-1.0, 1.0).expect("range");
    let mut start = 0;
    for (seg, &len) in segments.iter().zip(&lengths) {
        if seg.noise > 0.0 && len > 0 {
            let noise: Vec<f64> = (0..len).map(|_| white.sample(rng)).collect();
            let q = (seg.noise_fc / seg.noise_bw).max(0.3);
            let band = design_bandpass::<f64>(seg.noise_fc, q, FS)?;
            let shaped = filter_signal(&band, &noise)?;
            let ramp = (0.004 * FS) as usize;
            for (j, v) in shaped.iter().enumerate() {
                let edge = j.min(len - 1 - j);
                let w = if edge < ramp {
                    0.5 - 0.5 * (std::f64::consts::PI * edge as f64 / ramp as f64).cos()
                } else {
                    1.0
                };
                utterance[start + j] += seg.noise * 1.7 * w * v;
            }
        }
        start += len;
    }

    let peak = utterance.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let mut clip = vec![0.0; CLIP_SAMPLES];
    let slack = CLIP_SAMPLES.saturating_sub(n);
    let onset = rng.random_range(slack.min(800)..=slack.saturating_sub(800).max(slack.min(800)));
    for (j, v) in utterance.iter().enumerate() {
        if onset + j < CLIP_SAMPLES {
            clip[onset + j] = v / peak * speaker.peak;
        }
    }
    for s in &mut clip {
        *s += speaker.background * white.sample(rng);
    }
    Ok(clip)
}

/// Deterministic 16-bit clip `index` of `word` for a corpus seed.
pub fn synthesize_clip(word: &str, index: usize, corpus_seed: u64) -> Result<Vec<i16>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed::derive_labeled(corpus_seed, word), &[index as u64]));
    let speaker = Speaker::random(&mut rng);
    let clip = synthesize_word(word, &speaker, &mut rng)?;
    Ok(clip
        .iter()
        .map(|v| (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect())
}

/// Writes `clips_per_word(word)` clips for every corpus word under `root`.
pub fn write_corpus(root: impl AsRef<Path>, clips_per_word: impl Fn(&str) -> usize + Sync, corpus_seed: u64) -> Result<()> {
    let root = root.as_ref();
    let jobs: Vec<(&str, usize)> = KEYWORDS
        .iter()
        .chain(UNKNOWN_WORDS.iter())
        .flat_map(|w| (0..clips_per_word(w)).map(move |i| (*w, i)))
        .collect();
    for w in KEYWORDS.iter().chain(UNKNOWN_WORDS.iter()) {
        let dir = root.join(w);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    jobs.par_iter().try_for_each(|&(word, i)| {
        let codes = synthesize_clip(word, i, corpus_seed)?;
        let path = root.join(word).join(format!("syn{i:05}_nohash_0.wav"));
        fs::write(&path, wav::encode_pcm16_mono(&codes, SAMPLE_RATE_HZ)).map_err(|e| Error::io(&path, e))
    })
}

/// Clip counts that cover a split quota for every keyword and unknown word.
pub fn clips_needed(quotas: &crate::dataset::SplitQuotas) -> (usize, usize) {
    let n_unknown = UNKNOWN_WORDS.len();
    let keyword = quotas.train_keyword + 2 * quotas.eval_keyword;
    let unknown = quotas.train_unknown.div_ceil(n_unknown) + 2 * quotas.eval_unknown.div_ceil(n_unknown);
    (keyword, unknown)
}
