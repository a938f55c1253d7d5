use thiserror::Error;

use crate::profile::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite {quantity} at r = {r}")]
    NonFiniteAtRadius { quantity: &'static str, r: f64 },

    #[error("non-finite {quantity} at point ({x}, {y})")]
    NonFiniteAtPoint { quantity: &'static str, x: f64, y: f64 },

    #[error("twist integral diverges near r = {r}")]
    Divergence { r: f64 },

    #[error("g·h − f² = {value} is negative beyond tolerance at r = {r}")]
    Domain { r: f64, value: f64 },

    #[error("profile validation failed: {}", .0.summary())]
    Validation(ValidationReport),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("classification failed: {0}")]
    Classification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
