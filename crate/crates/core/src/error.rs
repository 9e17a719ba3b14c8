//! Crate-wide error type.

use std::fmt;

/// Errors produced by tensor math, model assembly, data handling, and training.
#[derive(Debug)]
pub enum Error {
    /// A shape was empty, had a zero extent, or did not match its data length.
    InvalidShape(String),
    /// Two tensors that must agree in shape did not.
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize>, context: String },
    /// A configuration value was out of its documented range.
    Config(String),
    /// Dataset files or label content were malformed.
    Data(String),
    /// A checkpoint file could not be read back as a model.
    Checkpoint(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidShape(msg) => write!(f, "invalid shape: {msg}"),
            Error::ShapeMismatch { expected, actual, context } => {
                write!(f, "shape mismatch in {context}: expected {expected:?}, got {actual:?}")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
