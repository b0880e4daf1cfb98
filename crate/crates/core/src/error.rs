use thiserror::Error;

/// Errors produced by the word, permutation, unitary, and telescope layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {index} out of range for rank {rank}")]
    GeneratorOutOfRange { index: u32, rank: u32 },

    #[error("letter sign must be +1 or -1, got {0}")]
    InvalidSign(i8),

    #[error("word must be nontrivial")]
    TrivialWord,

    #[error("word `{0}` is not balanced")]
    UnbalancedWord(String),

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: u32, right: u32 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unitary within tolerance: residual {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("conflicting permutation constraint: {0}")]
    ConstraintConflict(String),

    #[error("permutation degree {degree} too small: need at least {minimum}")]
    DegreeTooSmall { degree: usize, minimum: usize },

    #[error("degree-{degree} construction did not realize the two-cycle (1, {point})")]
    TwoCycleNotRealized { degree: usize, point: usize },

    #[error("invalid search budget: {0}")]
    InvalidBudget(String),

    #[error("target eigenvalue must have unit modulus, got modulus {0}")]
    TargetNotUnitModulus(f64),

    #[error(
        "tolerance {tolerance:.3e} not reached after {iterations} iterations (best residual {best:.3e})"
    )]
    ToleranceNotReached {
        tolerance: f64,
        iterations: usize,
        best: f64,
    },

    #[error("clamp level must be nonnegative, got {0}")]
    NegativeClampLevel(f64),

    #[error("eigenvalue solver failed to converge")]
    EigenSolverFailed,

    #[error("dimension bound 4*{rank}^{length} overflows")]
    BoundOverflow { rank: u32, length: usize },

    #[error("invalid telescope shape: {0}")]
    InvalidShape(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid prescribed sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("evaluation point must lie in (0, inf], got {0}")]
    PointOutOfDomain(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
