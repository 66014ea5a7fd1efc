//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failures surfaced by the workbench.
///
/// The command-line layer maps [`Error::Config`] to exit code 2 and every
/// other variant to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure (file missing, permission, short write, ...).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but does not parse as the expected format. The string
    /// names the file/format and the offending line where possible.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration: unknown keys, out-of-range values, missing
    /// required settings, or contradictory command-line arguments.
    #[error("configuration error: {0}")]
    Config(String),

    /// A runtime precondition was violated (dimension mismatch, non-finite
    /// number where a finite one is required, and similar).
    #[error("invalid operation: {0}")]
    Invalid(String),
}

impl Error {
    /// Shorthand for a [`Error::Format`] with a formatted message.
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a [`Error::Invalid`] with a formatted message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
