use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its domain; `key` names the offending field.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("input too short: {got} samples, need at least {need}")]
    InputTooShort { got: usize, need: usize },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("unsupported audio format in {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("dataset error for word `{word}`: {message}")]
    Dataset { word: String, message: String },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("sweep point {point}{}: {source}", trial.map(|t| format!(", trial {t}")).unwrap_or_default())]
    Experiment {
        point: usize,
        trial: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for configuration and argument errors, which the CLI reports with exit code 2.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config { .. } | Error::Argument(_) => true,
            Error::Experiment { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
