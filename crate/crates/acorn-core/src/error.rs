//! Error type shared across the crate.
//!
//! The three domain variants map onto the CLI exit codes: `Config` → 1,
//! `Data` → 2, `Numeric` → 3. I/O failures are surfaced as `Io` and treated
//! as data errors by the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad fractions, conflicting switches, unknown keys.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure during training or scoring (non-finite loss, etc.).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
