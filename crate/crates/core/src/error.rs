use thiserror::Error;

/// Errors raised by domain construction, enumeration and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("location {0} is not on the domain boundary")]
    NotOnBoundary(String),

    #[error("vertex {0} is not interior (missing neighbors)")]
    NotInterior(usize),

    #[error("mid-edges {0} and {1} are not adjacent at vertex {2}")]
    NotAdjacent(usize, usize, usize),

    #[error("path is not connected at step {0}")]
    DisconnectedPath(usize),

    #[error("contour is not closed")]
    OpenContour,

    #[error("configuration violates the parity constraint at vertex {0}")]
    Parity(usize),

    #[error("over budget: needs {required}, budget is {budget} (log2 of the configuration count, or walk length for the census)")]
    Budget { required: u32, budget: u32 },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("linear system inconsistent: residual {residual:e} at {location}")]
    Inconsistent { residual: f64, location: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
