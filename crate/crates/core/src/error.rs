use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("projection vector for mode {mode} is not unit norm (norm = {norm})")]
    NotUnitNorm { mode: usize, norm: f64 },

    #[error("invalid patch size {k1}x{k2}: both extents must be odd and at least 3")]
    InvalidPatchSpec { k1: usize, k2: usize },

    #[error("invalid kernel size {rows}x{cols}: both extents must be odd")]
    EvenKernel { rows: usize, cols: usize },

    #[error("degenerate class structure: {0}")]
    DegenerateClasses(String),

    #[error("no remaining directions: {0}")]
    NoRemainingDirections(String),

    #[error("requested {requested} filters but only {available} are available")]
    TooManyFilters { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("hash value {value} out of range for {bins} bins")]
    HashOutOfRange { value: u32, bins: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("bad magic: expected \"TBN1\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: header declares {expected} bytes of data, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("version mismatch: model format {found}, this build reads {expected}")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("corrupted section {section}: {reason}")]
    CorruptedSection { section: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
