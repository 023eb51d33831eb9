use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The direction function does not satisfy the non-absorption condition,
    /// so the chain need not be ergodic and no stationary density is defined.
    #[error("ergodicity condition violated: {0}")]
    Ergodicity(String),

    /// A well-formed input that this implementation does not handle.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A proportion law whose density does not integrate to one.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// An iterative or adaptive numerical method failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The boundary value problem has no usable null vector.
    #[error("no null vector: {reason} (singular values {singular_values:?})")]
    NoNullVector {
        reason: String,
        singular_values: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        domain(format!("{name} = {x} is outside [0, 1]"))
    }
}

pub(crate) fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} = {x} must be positive and finite"))
    }
}
