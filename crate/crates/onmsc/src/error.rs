//! Crate-wide error type.
//!
//! Errors carry a category rather than a deep hierarchy: the pipeline maps
//! categories to process exit codes (`2` configuration, `3` data, `4`
//! numerical), and everything else only needs the message.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates a structural requirement (shape, symmetry,
    /// finiteness, missing labels, unparseable files).
    #[error("invalid data: {0}")]
    Data(String),

    /// An iterative method failed to converge or a matrix was too
    /// degenerate to factor.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code the pipeline reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_category() {
        assert_eq!(Error::config("x").exit_code(), 2);
        assert_eq!(Error::data("x").exit_code(), 3);
        assert_eq!(Error::numerical("x").exit_code(), 4);
        let io = Error::from(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(io.exit_code(), 3);
    }

    #[test]
    fn messages_include_category() {
        assert_eq!(
            Error::config("k must be positive").to_string(),
            "invalid configuration: k must be positive"
        );
    }
}
