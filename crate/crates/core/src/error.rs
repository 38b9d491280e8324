use thiserror::Error;

/// Errors raised while validating device parameters or evaluating the energy model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid device parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("permissible window violated: {0}")]
    Window(String),
    #[error("invalid harvest model: {0}")]
    Harvest(String),
    #[error("degenerate voltage grid: {0}")]
    Grid(String),
    #[error("unknown mode `{0}` (expected one of l, s, t)")]
    UnknownMode(String),
    #[error("unknown task `{0}` (expected s or t)")]
    UnknownTask(String),
    #[error("negative harvested current {0} A")]
    NegativeCurrent(f64),
    #[error("negative initial voltage {0} V")]
    NegativeVoltage(f64),
    #[error("number of steps must be at least 1")]
    ZeroSteps,
    #[error("current discretization needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("transmit task is disabled for this device")]
    NoTransmitTask,
    #[error("action {action} not allowed in state {state}")]
    ActionNotAllowed { state: String, action: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Errors from the LP / RVI / structural-analysis layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded (entering column {0})")]
    Unbounded(usize),
    #[error("singular basis encountered during factorization (step {0})")]
    SingularBasis(usize),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("relative value iteration did not converge: span {span:e} after {iters} iterations")]
    NotConverged { span: f64, iters: usize },
    #[error("policy is not threshold-structured in superstate (tau={tau}, f={flag}): pattern {pattern}")]
    NotThreshold { tau: usize, flag: u8, pattern: String },
    #[error("state has a single allowed action; advantage undefined")]
    SingletonActionSet,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failure of a whole command, classified for the process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Verification(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}
