use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state has zero norm")]
    DegenerateState,
    #[error("non-finite value at node ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("point ({q}, {p}) left the tabulated domain")]
    OutOfDomain { q: f64, p: f64 },
    #[error("energy operator needs the previous and next snapshots")]
    MissingSnapshots,
    #[error("boundary leak: edge mass {edge_mass:.3e} exceeds {limit:.1e}")]
    BoundaryLeak { edge_mass: f64, limit: f64 },
    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, QpError>;
