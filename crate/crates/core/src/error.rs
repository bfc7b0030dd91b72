use thiserror::Error;

use crate::signal::ConvMode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("signal contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("box size {k} does not fit a {mode:?} measurement of an axis of length {n}")]
    KernelTooLarge { k: usize, n: usize, mode: ConvMode },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("box sizes {a} and {b} are not coprime (gcd {gcd})")]
    NotCoprime { a: usize, b: usize, gcd: usize },

    /// The stacked forward map has a zero singular value.
    #[error("non-invertible configuration: {detail}")]
    NonInvertible {
        /// Grid index of an offending frequency, one entry per axis, when known.
        frequency: Option<Vec<usize>>,
        detail: String,
    },

    #[error("dense problem with {columns} unknowns exceeds the limit of {limit}")]
    DenseTooLarge { columns: usize, limit: usize },

    #[error("inconsistent measurement set: {0}")]
    Inconsistent(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: String,
        expected: String,
        found: String,
    },

    #[error("unsupported manifest version {0}")]
    Version(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the failure is a property of the measurement design rather
    /// than of the inputs' encoding.
    pub fn is_non_invertible(&self) -> bool {
        matches!(self, Error::NonInvertible { .. })
    }
}
