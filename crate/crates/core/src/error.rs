use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    ShapeMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Pfm(#[from] PfmError),

    #[error("config error: {0}")]
    Config(String),

    #[error("scene `{scene}`: {reason}")]
    Corpus { scene: String, reason: String },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Failures specific to the portable float map codec.
#[derive(Debug, Error)]
pub enum PfmError {
    #[error("malformed PFM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PFM variant `{0}` (only grayscale `Pf` is supported)")]
    UnsupportedVariant(String),
    #[error("unsupported endianness: scale {0} declares big-endian data")]
    UnsupportedEndianness(f64),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this failure class: 2 config, 3 corpus/data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            Error::NonFinite(_) => 4,
            Error::DimensionMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::Empty(_)
            | Error::Pfm(_)
            | Error::Corpus { .. }
            | Error::Io { .. } => 3,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
