use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid closure table: {0}")]
    InvalidClosure(String),
    #[error("non-finite closure argument {0}")]
    NonFiniteArgument(f64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("viscosity {value} at node {node} is below the lower bound {bound}")]
    ViscosityBelowBound { node: usize, value: f64, bound: f64 },
    #[error("boundary samples: expected {expected}, got {got}")]
    IncompleteBoundary { expected: usize, got: usize },
    #[error("boundary flux {flux:e} exceeds tolerance {tol:e}")]
    FluxViolation { flux: f64, tol: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("linear solve residual {residual:e} above tolerance {tol:e}")]
    LinearResidual { residual: f64, tol: f64 },
    #[error("iteration diverged at step {iteration}: norm {norm:e}")]
    Divergence { iteration: usize, norm: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("newton iteration failed after {steps} steps, residuals {trace:?}")]
    NewtonFailure { steps: usize, trace: Vec<f64> },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
