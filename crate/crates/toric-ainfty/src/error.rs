use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate disk class id {0}")]
    DuplicateClass(u32),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live over different monoids")]
    MonoidMismatch,
    #[error("operands carry different energy cutoffs")]
    CutoffMismatch,
    #[error("direction {direction} out of range for dimension {dim}")]
    DirectionOutOfRange { direction: usize, dim: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("arity {arity} exceeds the cutoff {cutoff}")]
    ArityExceeded { arity: usize, cutoff: usize },
    #[error("cutoff too small: {0}")]
    CutoffInsufficient(String),
    #[error("convention mismatch: {0}")]
    ConventionMismatch(String),
    #[error("inconsistent completion constraint: {0}")]
    Inconsistent(String),
    #[error("nonlinear constraint: {0}")]
    Nonlinear(String),
    #[error("division leaves a nonzero remainder: {0}")]
    Remainder(String),
    #[error("point outside the polytope: {0}")]
    OutsidePolytope(String),
    #[error("curvature mismatch: {0}")]
    CurvatureMismatch(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
