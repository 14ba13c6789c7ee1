//! Crate-wide error type.

use std::path::PathBuf;

/// Everything that can go wrong inside `spectral2d`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two operands disagree on a dimension.
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// A structural precondition on the input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The eigensolver input was not symmetric.
    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {deviation:e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },

    /// Jacobi sweeps ran out before the off-diagonal mass vanished.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    /// A frequency row of the input is identically zero, so the exact
    /// construction has no solution for that row.
    #[error("frequency row {row} of the input signal is zero (max |entry| = {max_abs:e}); exact construction requires every row to be nontrivial")]
    ZeroFrequencyRow { row: usize, max_abs: f64 },

    /// NaN or infinity appeared where a finite value was required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// A configuration value is out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Text input could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    /// A serialized document carries an unsupported schema version.
    #[error("unsupported schema_version {found} (this build reads version {expected})")]
    SchemaVersion { expected: u32, found: u64 },

    /// Filesystem failure, tagged with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON document.
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
