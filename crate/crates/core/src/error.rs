use thiserror::Error;

/// Errors produced by mesh generation, discretization, measurement and studies.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate mesh: {0}")]
    MeshDegeneracy(String),

    #[error("problem validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("coercivity check failed: min(c - a'/2) = {gamma:e} <= 0")]
    Coercivity { gamma: f64 },

    #[error("singular pivot {pivot:e} at row {row} (row scale {scale:e})")]
    SingularPivot { row: usize, pivot: f64, scale: f64 },

    #[error("unsupported polynomial order {0} (only k = 1 is supported here)")]
    UnsupportedOrder(usize),

    #[error("finite element functions live on different meshes or orders")]
    MeshMismatch,

    #[error("point {0} lies outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
