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

    #[error("malformed wav file {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("unsupported sample rate {got} Hz (pipeline requires {expected} Hz; resample externally)")]
    SampleRate { got: u32, expected: u32 },

    #[error("protocol parse error at line {line}: {reason}")]
    Protocol { line: usize, reason: String },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("malformed checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("score file error: {0}")]
    Score(String),

    #[error("metric error: {0}")]
    Metric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
