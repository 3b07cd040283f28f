use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinitePoint(f64, f64),
    #[error("degenerate element {0}")]
    DegenerateElement(usize),
    #[error("unsupported quadrature degree {0} (expected 1, 2 or 4)")]
    UnsupportedQuadrature(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("refinement did not terminate within {0} sweeps")]
    RefinementLimit(usize),
    #[error("no test function for boundary vertex {0}")]
    BoundaryVertex(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constrained vertex {0} has no prescribed value")]
    MissingConstraintValue(usize),
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-positive error value {0} in convergence table")]
    NonPositiveError(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
