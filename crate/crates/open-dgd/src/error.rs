use thiserror::Error;

/// Errors produced by instance construction, linear solves, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("adjacency matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("adjacency entry ({i}, {j}) is negative or not finite")]
    InvalidWeight { i: usize, j: usize },

    #[error("diagonal entry {0} of the adjacency matrix must be positive")]
    ZeroDiagonal(usize),

    #[error("communication graph is disconnected")]
    Disconnected,

    #[error("invalid function class parameters: {0}")]
    InvalidClassParams(String),

    #[error("hessian is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error(
        "eta * rho is too large for a stochastic mixing matrix: \
         row {agent} would get a negative self weight"
    )]
    MixingNotStochastic { agent: usize },

    #[error("schedule event at iteration {iteration} targets agent {agent}, but there are only {agents} agents")]
    AgentOutOfRange {
        iteration: usize,
        agent: usize,
        agents: usize,
    },

    #[error("schedule event at iteration {iteration} replaces agent {agent} with a function outside the class")]
    ScheduleMembership { iteration: usize, agent: usize },

    #[error("invalid descriptor: {0}")]
    Descriptor(String),

    #[error("invalid search point: {0}")]
    SearchPoint(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
