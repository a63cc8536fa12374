//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or flow parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A point lies outside the image of an invertible map.
    #[error("point {value} outside flow image ({lo}, {hi})")]
    OutOfImage { value: f64, lo: f64, hi: f64 },

    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A flow is not invertible at an evaluated point.
    #[error("flow not invertible: {0}")]
    NonInvertible(String),

    /// A Riemannian metric evaluated to a non-positive value.
    #[error("metric tensor must be positive, got {value} at x = {x}")]
    NonPositiveMetric { x: f64, value: f64 },

    /// An expectation backend cannot produce a trustworthy value.
    #[error("backend error: {0}")]
    Backend(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file or argument string.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
