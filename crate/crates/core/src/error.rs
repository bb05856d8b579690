use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("invalid sign pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A point handed to a kernel lies on or outside the unit circle.
    #[error("point outside the open unit disc (|z| = {modulus})")]
    Domain { modulus: f64 },

    #[error("integral does not converge: {0}")]
    NonIntegrable(String),

    #[error("samples have non-zero mean {mean:e} (max |sample| = {max_abs:e})")]
    NonZeroMean { mean: f64, max_abs: f64 },

    #[error("closed-form gradient requires the checkerboard sign pattern")]
    PatternUnsupported,

    #[error("quadrature tolerance not met: estimate {estimate:e}, indicator {indicator:e}, tolerance {tolerance:e}")]
    ToleranceNotMet {
        estimate: f64,
        indicator: f64,
        tolerance: f64,
    },

    #[error("radial schedule does not contract (observed ratio {ratio})")]
    NoConvergence { ratio: f64 },

    #[error("weight is not integrable against du/u on (0,1]: {0}")]
    NonIntegrableWeight(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error comes from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonIntegrable(_)
                | Error::ToleranceNotMet { .. }
                | Error::NoConvergence { .. }
                | Error::NonIntegrableWeight(_)
                | Error::NonZeroMean { .. }
                | Error::Domain { .. }
                | Error::PatternUnsupported
                | Error::PreconditionFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
