use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("leading coefficient is not invertible: {0}")]
    NonInvertibleLeadingTerm(String),
    #[error("tau = {0} is not in the upper half plane")]
    NotInUpperHalfPlane(String),
    #[error("tail bound {bound:e} exceeds tolerance {tolerance:e}")]
    TailBoundExceeded { bound: f64, tolerance: f64 },
    #[error("weight {0} is not an even integer >= 4")]
    OddOrSmallWeight(i64),
    #[error("lattice is not even integral: {0}")]
    NotEvenIntegral(String),
    #[error("lattice is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mode incompatible with sector: {0}")]
    IncompatibleSector(String),
    #[error("unsupported insertion: {0}")]
    UnsupportedInsertion(String),
    #[error("basis has {size} kets, above the limit {limit}")]
    BasisTooLarge { size: usize, limit: usize },
    #[error("ill-conditioned fit: residual {residual:e}, condition number {condition:e}")]
    IllConditionedFit { residual: f64, condition: f64 },
    #[error("(2 pi i)-token mismatch at z-power {power}: {lhs} vs {rhs}")]
    TokenMismatch { power: i64, lhs: i32, rhs: i32 },
    #[error("coset class is empty, theta series not invertible: {0}")]
    NonInvertibleThetaLeading(String),
    #[error("exponent denominator {0} exceeds cap {1}")]
    DenominatorCapExceeded(u64, u64),
    #[error("invalid coset frame: {0}")]
    InvalidFrame(String),
    #[error("invalid SL2 element: determinant {0}")]
    NotInSl2(i64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
