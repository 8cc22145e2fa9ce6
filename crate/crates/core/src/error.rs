use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the collocation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model validation failed: {0}")]
    Validation(String),

    #[error("non-finite {what} at {location}")]
    NonFinite { what: &'static str, location: String },

    #[error("transition matrix is singular (min |pivot| = {min_pivot:e}, max |pivot| = {max_pivot:e})")]
    SingularTransition { min_pivot: f64, max_pivot: f64 },

    #[error("eigen iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("dominant eigenvalue {re} + {im}i is not real")]
    ComplexDominant { re: f64, im: f64 },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("quadrature failed to reach tolerance {tol:e} on [{lo}, {hi}] (estimate {estimate:e})")]
    Quadrature { lo: f64, hi: f64, tol: f64, estimate: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical core (singular pencil, iteration breakdown).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularTransition { .. }
                | Error::NoConvergence { .. }
                | Error::ComplexDominant { .. }
                | Error::Decomposition(_)
                | Error::Quadrature { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
