//! Error type shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model or experiment parameter is outside its admissible range.
    Param(String),
    /// A (spec, model, path) combination that the contract forbids.
    Contract(String),
    /// An argument outside the mathematical domain of a special function.
    Domain(String),
    /// A numerical routine failed to reach its tolerance.
    Numerical(String),
    /// Malformed configuration or I/O problem.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Param(msg) => write!(f, "parameter error: {msg}"),
            Error::Contract(msg) => write!(f, "contract error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
