use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed run or problem configuration (bad indices, step-size bound, ...).
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Requested state space exceeds the exhaustive-enumeration guard.
    #[error("capacity exceeded: {what} = {requested} exceeds limit {limit}")]
    Capacity { what: &'static str, requested: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// Transition quantities requested at s = 1 where the Trotter coupling diverges.
    #[error("singular schedule: the Trotter coupling diverges at s = 1")]
    SingularSchedule,

    #[error("index out of range: {0}")]
    Index(String),

    #[error("integration accuracy lost: norm drift {drift:.3e} at t = {time}; reduce dt_sd")]
    IntegrationAccuracy { drift: f64, time: f64 },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("problem file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
