//! Simulation laboratory for analog filterbank audio features.
//!
//! The pipeline mirrors an analog front end: a bank of second-order bandpass
//! filters feeds a bank of short-time average-power detectors, and the
//! resulting log-power spectrogram is classified by a small convolutional
//! network. A first-order power model prices each filterbank configuration,
//! and the experiment harness sweeps one architectural parameter at a time.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! name the concrete instantiations used by the pipeline and the tests.

pub mod classifier;
pub mod config;
pub mod dataset;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod extractor;
pub mod filterbank;
pub mod plot;
pub mod power;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Filterbank realized in double precision (analysis and design probes).
pub type FilterbankDesign64 = filterbank::FilterbankDesign<f64>;
/// Filterbank realized in single precision.
pub type FilterbankDesign32 = filterbank::FilterbankDesign<f32>;
pub type Spectrogram32 = extractor::Spectrogram<f32>;
pub type Spectrogram64 = extractor::Spectrogram<f64>;
pub type Normalizer32 = extractor::Normalizer<f32>;
/// Network used for training runs.
pub type SmallNet32 = classifier::SmallNet<f32>;
/// Network used for gradient verification.
pub type SmallNet64 = classifier::SmallNet<f64>;
pub type Waveform64 = dataset::Waveform<f64>;
