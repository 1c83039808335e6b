use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the navigation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("history does not cover t = {requested:.6} s (available {first:.6}..{last:.6} s)")]
    Coverage { requested: f64, first: f64, last: f64 },

    #[error("out-of-order sample: t = {got:.6} s is not after {last:.6} s")]
    Ordering { got: f64, last: f64 },

    #[error("stale measurement captured at {capture:.6} s, oldest buffered snapshot is {oldest:.6} s")]
    StaleMeasurement { capture: f64, oldest: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no motion estimate: consensus {inliers} below minimum {required}")]
    NoMotionEstimate { inliers: usize, required: usize },

    #[error("scene error: {0}")]
    Scene(String),

    #[error("trajectory alignment: {0}")]
    Alignment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
