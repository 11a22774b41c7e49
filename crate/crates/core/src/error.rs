use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("matrix is not positive definite (lambda_min ~ {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error(
        "normal equations are singular (lambda_min ~ {lambda_min:e}); \
         about {suggested_m:.0} challenges are needed for an invertible system"
    )]
    Singular { lambda_min: f64, suggested_m: f64 },

    #[error("degenerate challenge distribution: every second-moment eigenvalue is below threshold")]
    DegenerateDistribution,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Singular { .. }
                | Error::DegenerateDistribution
        )
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
