use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("label sidecar {path} has {labels} lines for {points} points")]
    LabelLengthMismatch {
        path: PathBuf,
        labels: usize,
        points: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature dimension mismatch: expected C1={expected}, got C1={actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: String },

    #[error("unsupported version {found} in {path} (expected {expected})")]
    BadVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated file {path}: {msg}")]
    Truncated { path: PathBuf, msg: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("sample {sample_id}: {msg}")]
    Sample { sample_id: String, msg: String },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
