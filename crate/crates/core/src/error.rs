use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PovmError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:.3e})")]
    Singular { min_eigenvalue: f64 },
    #[error("effect {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { index: usize, min_eigenvalue: f64 },
    #[error("effects do not sum to the identity (max deviation {deviation:.3e})")]
    SumNotIdentity { deviation: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not a projector (max deviation {deviation:.3e})")]
    NotProjector { deviation: f64 },
    #[error("diagonal entry {index} of the Gram matrix vanishes")]
    ZeroDiagonal { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("outcome counts differ ({left} vs {right})")]
    OutcomeCountMismatch { left: usize, right: usize },
    #[error("basis {index} does not span the range of its effect")]
    BadBasis { index: usize },
    #[error("component {outcome} cannot be resolved (rank {rank})")]
    NotResolvable { outcome: usize, rank: usize },
    #[error("subspace family is not independent")]
    NotIndependent,
    #[error("subspace family does not span the ambient space")]
    NotSpanning,
    #[error("subspace family is already maximal")]
    AlreadyMaximal,
    #[error("rank list violates the admissibility constraints: {0}")]
    ConstraintViolation(String),
    #[error("rank list is not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, PovmError>;
