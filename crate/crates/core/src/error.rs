use thiserror::Error;

/// Errors raised by the solver, scheduler and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions disagree with the system configuration.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A noise-to-channel ratio is zero, negative or not finite.
    #[error("non-positive noise-to-channel ratio at subchannel {subchannel}, user {user}: {value}")]
    NonPositiveNcr { subchannel: usize, user: usize, value: f64 },

    /// An operation was called outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The configuration is well-formed but describes an infeasible system
    /// (for example `M < 2` or per-subchannel caps below the total budget).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// The configuration could not be parsed or is structurally invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Scheduler state is inconsistent with the requested operation.
    #[error("scheduler state error: {0}")]
    State(String),

    /// The brute-force oracle refuses instances it cannot enumerate.
    #[error("instance too large for oracle: {0}")]
    OracleTooLarge(String),

    /// The water-level bisection could not bracket a root.
    #[error("failed to bracket the water level after {doublings} doublings")]
    BracketFailure { doublings: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
