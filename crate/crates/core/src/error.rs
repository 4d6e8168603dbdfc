use thiserror::Error;

use crate::hodge::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("vertex {0} does not belong to family {1}")]
    InvalidVertex(String, String),

    #[error("window size limit of {limit} vertices exceeded")]
    SizeLimit { limit: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("edge {0} is not an edge of the window")]
    MissingEdge(String),

    #[error("functions live on different windows")]
    IncompatibleDomain,

    #[error("right-hand side sums to {sum:e}; the free Laplacian needs a zero-sum right-hand side")]
    IncompatibleRhs { sum: f64 },

    #[error("conjugate gradient did not converge: {0}")]
    SolverFailure(SolveReport),

    #[error("insufficient window: {0}")]
    InsufficientWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
