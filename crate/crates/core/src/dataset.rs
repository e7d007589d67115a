//! Speech Commands (v0.02 layout) ingestion and deterministic split building.
//!
//! The corpus lives at `<root>/<word>/<clip>.wav`. Ten keywords form classes
//! 0..=9 and the remaining 25 words share class 10 ("unknown"). Splits are
//! drawn per word from a seeded permutation of that word's sorted file list,
//! taking the train, validation and test quotas as consecutive runs so the
//! three splits can never share a file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{self, Digester};
use crate::wav;

pub const SAMPLE_RATE_HZ: u32 = 16_000;
/// One second at 16 kHz.
pub const CLIP_SAMPLES: usize = 16_000;

pub const KEYWORDS: [&str; 10] = ["yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"];

/// The 25 non-keyword words of the v0.02 corpus.
pub const UNKNOWN_WORDS: [&str; 25] = [
    "backward", "bed", "bird", "cat", "dog", "eight", "five", "follow", "forward", "four", "happy", "house",
    "learn", "marvin", "nine", "one", "seven", "sheila", "six", "three", "tree", "two", "visual", "wow", "zero",
];

pub const N_CLASSES: usize = 11;
pub const UNKNOWN_CLASS: usize = 10;

/// Class list: the ten keywords in fixed order, then "unknown".
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelMap;

impl LabelMap {
    pub fn classes(&self) -> [&'static str; N_CLASSES] {
        let mut out = ["unknown"; N_CLASSES];
        out[..10].copy_from_slice(&KEYWORDS);
        out
    }

    pub fn class_of(&self, word: &str) -> Option<usize> {
        KEYWORDS
            .iter()
            .position(|k| *k == word)
            .or_else(|| UNKNOWN_WORDS.contains(&word).then_some(UNKNOWN_CLASS))
    }

    pub fn name(&self, class: usize) -> &'static str {
        self.classes()[class]
    }
}

/// Mono audio scaled to [-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<T>,
    pub sample_rate_hz: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn from_pcm16(codes: &[i16], sample_rate_hz: u32) -> Self {
        let scale = T::lit(1.0 / 32768.0);
        Self {
            samples: codes.iter().map(|&c| T::lit(c as f64) * scale).collect(),
            sample_rate_hz,
        }
    }
}

/// Reads a 16-bit mono 16 kHz clip, zero-padding or truncating it to one second.
pub fn load_waveform<T: Scalar>(path: impl AsRef<Path>) -> Result<Waveform<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parsed = wav::parse(&bytes).map_err(|message| Error::Parse {
        path: path.to_owned(),
        message,
    })?;
    if !parsed.format.is_pcm16_mono(SAMPLE_RATE_HZ) {
        return Err(Error::UnsupportedFormat {
            path: path.to_owned(),
            message: format!("{} (need PCM, 1 channel, 16000 Hz, 16 bits)", parsed.format),
        });
    }
    let mut codes = parsed.pcm16_samples();
    codes.resize(CLIP_SAMPLES, 0);
    Ok(Waveform::from_pcm16(&codes, SAMPLE_RATE_HZ))
}

/// Per-class example counts for each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitQuotas {
    pub train_keyword: usize,
    pub train_unknown: usize,
    pub eval_keyword: usize,
    pub eval_unknown: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 200 per keyword + 800 unknown in each of train, validation and test.
    Small,
    /// Ten times the small training set; evaluation splits keep the small quotas.
    Large,
    /// 50 per keyword + 200 unknown per split, for quick desk runs.
    Desk,
}

impl Preset {
    pub fn quotas(self) -> SplitQuotas {
        match self {
            Preset::Small => SplitQuotas {
                train_keyword: 200,
                train_unknown: 800,
                eval_keyword: 200,
                eval_unknown: 800,
            },
            Preset::Large => SplitQuotas {
                train_keyword: 2000,
                train_unknown: 8000,
                eval_keyword: 200,
                eval_unknown: 800,
            },
            Preset::Desk => SplitQuotas {
                train_keyword: 50,
                train_unknown: 200,
                eval_keyword: 50,
                eval_unknown: 200,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "small",
            Preset::Large => "large",
            Preset::Desk => "desk",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Preset::Small),
            "large" => Ok(Preset::Large),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::config("preset", format!("unknown preset `{other}` (small, large, desk)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledClip {
    /// Path relative to the corpus root, `<word>/<file>`.
    pub path: PathBuf,
    pub class_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplits {
    pub root: PathBuf,
    pub seed: u64,
    pub quotas: SplitQuotas,
    pub train: Vec<LabeledClip>,
    pub validation: Vec<LabeledClip>,
    pub test: Vec<LabeledClip>,
}

impl DatasetSplits {
    pub fn split(&self, which: Split) -> &[LabeledClip] {
        match which {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn class_counts(&self, which: Split) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for clip in self.split(which) {
            counts[clip.class_index] += 1;
        }
        counts
    }

    pub fn absolute_path(&self, clip: &LabeledClip) -> PathBuf {
        self.root.join(&clip.path)
    }

    /// Digest of the split membership, independent of the root location.
    pub fn manifest_digest(&self) -> String {
        let mut d = Digester::new();
        for split in Split::ALL {
            d.bytes(split.name().as_bytes());
            for clip in self.split(split) {
                d.bytes(clip.path.to_string_lossy().as_bytes());
                d.u64(clip.class_index as u64);
            }
        }
        d.finish()
    }

    /// Manifest CSV with columns `path,class_index,split`.
    pub fn write_manifest<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "class_index", "split"])?;
        for split in Split::ALL {
            for clip in self.split(split) {
                w.write_record([
                    clip.path.to_string_lossy().as_ref(),
                    &clip.class_index.to_string(),
                    split.name(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("manifest", e))?;
        Ok(())
    }

    /// Subset keeping at most `per_class` examples of each class from every split.
    pub fn truncated(&self, per_class: [usize; N_CLASSES]) -> Self {
        let take = |clips: &[LabeledClip]| {
            let mut seen = [0usize; N_CLASSES];
            clips
                .iter()
                .filter(|c| {
                    seen[c.class_index] += 1;
                    seen[c.class_index] <= per_class[c.class_index]
                })
                .cloned()
                .collect()
        };
        Self {
            train: take(&self.train),
            validation: take(&self.validation),
            test: take(&self.test),
            ..self.clone()
        }
    }
}

fn list_wavs(root: &Path, word: &str) -> Result<Vec<String>> {
    let dir = root.join(word);
    let entries = fs::read_dir(&dir).map_err(|e| Error::Dataset {
        word: word.to_owned(),
        message: format!("cannot read {}: {e}", dir.display()),
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".wav") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Splits the per-split unknown total over the 25 words, ±1 per word; the
/// words receiving the remainder are chosen by a seeded permutation.
fn unknown_allocation(total: usize, seed: u64, split: Split) -> BTreeMap<&'static str, usize> {
    let n = UNKNOWN_WORDS.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x756e6b, split as u64]));
    order.shuffle(&mut rng);
    let mut alloc: BTreeMap<&'static str, usize> = UNKNOWN_WORDS.iter().map(|w| (*w, total / n)).collect();
    for &i in order.iter().take(total % n) {
        *alloc.get_mut(UNKNOWN_WORDS[i]).unwrap() += 1;
    }
    alloc
}

pub fn build_splits(root: impl AsRef<Path>, preset: Preset, seed: u64) -> Result<DatasetSplits> {
    build_splits_with(root, preset.quotas(), seed)
}

pub fn build_splits_with(root: impl AsRef<Path>, quotas: SplitQuotas, seed: u64) -> Result<DatasetSplits> {
    let root = root.as_ref();
    let labels = LabelMap;
    let unknown_train = unknown_allocation(quotas.train_unknown, seed, Split::Train);
    let unknown_val = unknown_allocation(quotas.eval_unknown, seed, Split::Validation);
    let unknown_test = unknown_allocation(quotas.eval_unknown, seed, Split::Test);

    let mut splits = DatasetSplits {
        root: root.to_owned(),
        seed,
        quotas,
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for word in KEYWORDS.iter().chain(UNKNOWN_WORDS.iter()) {
        let class_index = labels.class_of(word).expect("known word");
        let counts = if class_index == UNKNOWN_CLASS {
            [unknown_train[word], unknown_val[word], unknown_test[word]]
        } else {
            [quotas.train_keyword, quotas.eval_keyword, quotas.eval_keyword]
        };
        let need: usize = counts.iter().sum();
        let mut files = list_wavs(root, word)?;
        if files.len() < need {
            return Err(Error::Dataset {
                word: (*word).to_owned(),
                message: format!("{} clips available, quota needs {need}", files.len()),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_labeled(seed, word));
        files.shuffle(&mut rng);
        let mut it = files.into_iter();
        for (split, count) in [Split::Train, Split::Validation, Split::Test].into_iter().zip(counts) {
            let dest = match split {
                Split::Train => &mut splits.train,
                Split::Validation => &mut splits.validation,
                Split::Test => &mut splits.test,
            };
            dest.extend(it.by_ref().take(count).map(|name| LabeledClip {
                path: Path::new(word).join(name),
                class_index,
            }));
        }
    }
    Ok(splits)
}
