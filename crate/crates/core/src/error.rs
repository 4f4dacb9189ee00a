use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error(
        "operator is rank deficient (smallest eigenvalue {min_eigenvalue:e} below floor {floor:e})"
    )]
    RankDeficient { min_eigenvalue: f64, floor: f64 },
    #[error("invalid Schatten order {0}")]
    InvalidOrder(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error(
        "relative entropy is infinite (support of the first argument not contained in the second)"
    )]
    SupportMismatch,
    #[error("quadrature tail mass {tail:e} exceeds tolerance {tolerance:e}")]
    QuadratureTailTooLarge { tail: f64, tolerance: f64 },
    #[error("denominator {0:e} is numerically zero")]
    DegenerateDenominator(f64),
    #[error("sampling failed after {0} attempts")]
    SamplingFailed(usize),
    #[error("integration step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
