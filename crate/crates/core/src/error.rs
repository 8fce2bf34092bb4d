use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the assessment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {msg}")]
    Decode { path: PathBuf, msg: String },

    #[error("{path}: unsupported image format: {msg} (expected 8-bit single-channel)")]
    UnsupportedImage { path: PathBuf, msg: String },

    #[error("zero-area image")]
    ZeroArea,

    #[error("line {line}: {msg}")]
    DetectionLine { line: usize, msg: String },

    #[error("invalid class table: {0}")]
    ClassTable(String),

    #[error("class table has no rail_track class")]
    NoTrackClass,

    #[error("closing kernel must be odd and >= 1, got {0}")]
    InvalidKernel(i64),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no gauge samples for track {0}")]
    NoSamples(u32),

    #[error("no gauge reference found")]
    NoGaugeReference,

    #[error("point ({x}, {y}) outside image of size {width}x{height}")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("{path}: {msg}")]
    Spec { path: String, msg: String },

    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),

    #[error("row {0} is at or above the horizon")]
    AboveHorizon(i64),

    #[error("row {0} does not cross the rendered track")]
    RowOffTrack(i64),

    #[error("unmatched files: {}", .0.join(", "))]
    UnmatchedFiles(Vec<String>),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
