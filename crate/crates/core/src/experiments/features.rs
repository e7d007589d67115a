use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classifier::Example;
use crate::dataset::{load_waveform, DatasetSplits, Split};
use crate::envelope::EnvelopeConfig;
use crate::error::{Error, Result};
use crate::extractor::{extract_spectrogram, fit_normalizer, normalize, Normalizer, Spectrogram, EXTRACTOR_VERSION};
use crate::filterbank::{FilterbankConfig, FilterbankDesign};
use crate::seed::Digester;

/// Normalized features for every split plus the normalizer fit on the training split.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub normalizer: Normalizer<f32>,
    pub train: Vec<Example<f32>>,
    pub validation: Vec<Example<f32>>,
    pub test: Vec<Example<f32>>,
}

impl FeatureSet {
    pub fn split(&self, which: Split) -> &[Example<f32>] {
        match which {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }
}

fn cache_key(config: &FilterbankConfig, env: &EnvelopeConfig, dataset: &DatasetSplits) -> String {
    let mut d = Digester::new();
    d.bytes(b"afb-features");
    d.u64(EXTRACTOR_VERSION as u64);
    d.u64(config.n_filters as u64);
    for v in [config.f_max_hz, config.q_filter, config.f_min_hz, config.sample_rate_hz] {
        d.f64(v);
    }
    for v in [env.window_ms, env.hop_ms, env.sample_rate_hz] {
        d.f64(v);
    }
    d.bytes(dataset.manifest_digest().as_bytes());
    d.finish()
}

fn cache_path(dir: &Path, key: &str, split: Split) -> PathBuf {
    dir.join(format!("{}-{}.afbs", &key[..32], split.name()))
}

fn read_cache(path: &Path, expected: usize) -> Option<Vec<Spectrogram<f32>>> {
    let mut input = BufReader::new(fs::File::open(path).ok()?);
    let mut out = Vec::with_capacity(expected);
    for _ in 0..expected {
        out.push(Spectrogram::read_afbs(&mut input).ok()?);
    }
    let mut rest = [0u8; 1];
    matches!(input.read(&mut rest), Ok(0)).then_some(out)
}

fn write_cache(path: &Path, spectrograms: &[Spectrogram<f32>]) -> Result<()> {
    let tmp = path.with_extension("afbs.tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut out = BufWriter::new(file);
    for s in spectrograms {
        s.write_afbs(&mut out).map_err(|e| Error::io(&tmp, e))?;
    }
    out.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Unnormalized log spectrograms of one split, in manifest order.
///
/// Extraction runs in double precision; the result is rounded to `f32`, which
/// is also the cache's storage precision, so cached and fresh features agree
/// bit for bit.
pub fn features_for_split(
    config: &FilterbankConfig,
    env: &EnvelopeConfig,
    dataset: &DatasetSplits,
    split: Split,
    cache_dir: Option<&Path>,
) -> Result<Vec<Spectrogram<f32>>> {
    let design = FilterbankDesign::<f64>::new(*config)?;
    let clips = dataset.split(split);
    let path = cache_dir.map(|dir| cache_path(dir, &cache_key(config, env, dataset), split));
    if let Some(path) = &path {
        if let Some(mut cached) = read_cache(path, clips.len()) {
            log::debug!("feature cache hit {}", path.display());
            for s in &mut cached {
                s.channel_centers_hz = design.centers_hz.clone();
                s.frame_hop_ms = env.hop_ms;
            }
            return Ok(cached);
        }
    }
    let spectrograms = clips
        .par_iter()
        .map(|clip| {
            let path = dataset.absolute_path(clip);
            let wave = load_waveform::<f64>(&path)?;
            Ok(extract_spectrogram(&design, env, &wave)?.cast::<f32>())
        })
        .collect::<Result<Vec<_>>>()?;
    if let (Some(path), Some(dir)) = (&path, cache_dir) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_cache(path, &spectrograms)?;
    }
    Ok(spectrograms)
}

/// Extracts all three splits and standardizes them with statistics of the training split.
pub fn extract_features(
    config: &FilterbankConfig,
    env: &EnvelopeConfig,
    dataset: &DatasetSplits,
    cache_dir: Option<&Path>,
) -> Result<FeatureSet> {
    let raw: Vec<Vec<Spectrogram<f32>>> = Split::ALL
        .iter()
        .map(|&s| features_for_split(config, env, dataset, s, cache_dir))
        .collect::<Result<_>>()?;
    let normalizer = fit_normalizer(raw[0].iter())?;
    let mut splits = Split::ALL.iter().zip(raw).map(|(&split, spectrograms)| {
        dataset
            .split(split)
            .iter()
            .zip(spectrograms)
            .map(|(clip, s)| {
                Ok(Example {
                    features: normalize(&s, &normalizer)?,
                    label: clip.class_index,
                })
            })
            .collect::<Result<Vec<_>>>()
    });
    Ok(FeatureSet {
        train: splits.next().unwrap()?,
        validation: splits.next().unwrap()?,
        test: splits.next().unwrap()?,
        normalizer,
    })
}
