use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("trace is {trace:.12}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rank {rank} is invalid for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("channel is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },

    #[error("channel is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("basis vectors are not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("({0}, {1}, {2}) lies outside the CPTP tetrahedron")]
    OutsideTetrahedron(f64, f64, f64),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("state is not classical-quantum (block defect {residual:.3e})")]
    NotClassicalQuantum { residual: f64 },

    #[error("could not separate a common eigenbasis after {attempts} attempts")]
    DecompositionFailed { attempts: usize },

    #[error("invalid subset spec: {0}")]
    InvalidSubsetSpec(String),

    #[error("invalid discord-annihilating spec: {0}")]
    InvalidDaSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
