use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operator specification rejected: {0}")]
    SpecRejected(String),

    #[error("no lattice translate found within search radius {radius:.6} ({reason})")]
    NotFound { radius: f64, reason: String },

    #[error("grid construction failed at node {node}: {reason}")]
    GridConstruction { node: usize, reason: String },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("property violated: {0}")]
    Property(String),
}

pub type Result<T> = std::result::Result<T, Error>;
