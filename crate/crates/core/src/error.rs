//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors produced by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor or parameter shapes disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The weight file does not start with the expected magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    /// The weight file ends before the payload is complete.
    #[error("truncated weight file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    /// The weight file is malformed in some other way.
    #[error("malformed weight file: {0}")]
    WeightFormat(String),

    /// The dataset directory tree does not follow the class-per-subdirectory layout.
    #[error("dataset layout: {0}")]
    Layout(String),

    /// An image could not be decoded.
    #[error("failed to decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    /// A loss value became NaN or infinite.
    #[error("non-finite loss ({value}) at {context}")]
    NonFinite { value: f64, context: String },

    /// A tuner fold training failed.
    #[error("trial {trial}, fold {fold}")]
    Trial {
        trial: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
