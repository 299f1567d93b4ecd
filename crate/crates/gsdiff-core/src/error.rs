//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong, grouped so callers (notably the CLI) can
/// map error classes to exit codes without string matching.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value failed validation. `field` names the offender.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    /// Two rasters that must share geometry do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation was applied to a sampler state that cannot accept it.
    #[error("invalid trajectory state: {0}")]
    State(String),

    /// Filesystem failure, with the offending path attached.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file decoded, but is not the 8-bit RGB PNG this crate works with.
    #[error("{path}: {message}")]
    ImageFormat { path: PathBuf, message: String },

    /// Sidecar bytes are structurally wrong (magic or version).
    #[error("sidecar format error: {0}")]
    Format(String),

    /// Sidecar bytes fail the CRC check.
    #[error("sidecar corrupted: {0}")]
    Corrupt(String),

    /// Sidecar input is shorter than one record.
    #[error("sidecar truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    /// Sidecar decoded cleanly but its fields are mutually inconsistent.
    #[error("sidecar semantic error: {0}")]
    Semantic(String),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
