use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants carry enough context to act on the
/// failure without re-deriving it from the call site.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error("input truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("label {label} at index {index} outside 0..=9")]
    LabelRange { index: usize, label: u8 },

    #[error("class {class} has no examples")]
    EmptyClass { class: u8 },

    #[error("class pair ({a}, {b}) is invalid: classes must differ and be in 0..=9")]
    InvalidClassPair { a: u8, b: u8 },

    #[error("matrix has no nonzero entries")]
    NoEdges,

    #[error("empty sample")]
    EmptySample,

    #[error("sample of {got} values where at least {needed} are required")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("rank correlation undefined: {0}")]
    DegenerateRanks(&'static str),

    #[error("duplicate matrix name {0:?}")]
    DuplicateName(String),

    #[error("non-finite value {value} at {context}")]
    NonFinite { context: String, value: f64 },

    #[error("invalid probe spec {spec:?}: {reason}")]
    InvalidProbeSpec { spec: String, reason: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("dataset file missing: {path} (run the fetch-data command or set the data directory)")]
    MissingData { path: PathBuf },

    #[error("download of {url} failed: {reason}")]
    Download { url: String, reason: String },

    #[error("checksum mismatch for {path}: expected {expected}, got {got}")]
    Checksum {
        path: PathBuf,
        expected: String,
        got: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
