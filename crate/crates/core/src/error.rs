use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("pole of {function} at {at}")]
    Pole { function: &'static str, at: f64 },

    #[error("quadrature did not reach tolerance (estimate {estimate:e}, error {error:e}): {context}")]
    Accuracy {
        estimate: f64,
        error: f64,
        context: String,
    },

    #[error("integrand returned a non-finite value at x = {at}")]
    Evaluation { at: f64 },

    #[error("divergent quantity: {0}")]
    Divergence(String),

    #[error("fiducial vector is not admissible: {0}")]
    Admissibility(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported observable: {0}")]
    Unsupported(String),

    #[error("validity check failed: {0}")]
    Validity(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn divergence(msg: impl Into<String>) -> Self {
        Error::Divergence(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
