use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("price {price} lies below the public price {reserve}")]
    BelowReserve { price: f64, reserve: f64 },

    #[error("quadrature did not converge on [{lower}, {upper}]: estimated error {error:e}")]
    QuadratureFailed { lower: f64, upper: f64, error: f64 },

    #[error("integral diverges")]
    Divergent,

    #[error("root is not bracketed on [{lower}, {upper}]")]
    NotBracketed { lower: f64, upper: f64 },

    #[error("grid oracle supports at most {max} solvers, got {got}")]
    TooManySolvers { max: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
