use thiserror::Error;

pub type Result<T> = std::result::Result<T, QccpError>;

#[derive(Debug, Error)]
pub enum QccpError {
    /// The graph admits no cycle cover.
    #[error("instance is infeasible: the graph has no cycle cover")]
    InstanceInfeasible,

    #[error("enumeration limit of {limit} cycle covers exceeded")]
    LimitExceeded { limit: usize },

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("basis is rank deficient: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("simplex iteration guard hit after {0} pivots")]
    SimplexCycleGuard(usize),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("instance too large for exhaustive enumeration (n = {n}, limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("too many inequality constraints for the QP oracle ({0})")]
    TooManyConstraints(usize),

    #[error("no exact cover exists in the cycle pool")]
    SppInfeasible,

    #[error("perron vector has w0 = {0:e}, too close to zero")]
    W0NearZero(f64),

    #[error("oversampling exceeded its round budget of {0}")]
    RoundBudgetExceeded(usize),

    #[error("undersampling found no feasible extension within the retry budget")]
    NoFeasibleExtension,

    #[error("cycle pool is empty")]
    EmptyPool,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
