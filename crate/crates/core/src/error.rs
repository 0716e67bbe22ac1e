use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{method}: dimension {n} exceeds the configured limit of {limit}")]
    Capacity {
        method: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("coefficient a_{k} needs about {work:.3e} operations, over the budget of {budget:.3e}")]
    Budget { k: usize, work: f64, budget: f64 },

    #[error(
        "eps is below n^-rho so the exact 2^n fallback is required, \
         but n = {n} exceeds the Ryser limit of {limit}"
    )]
    ExactFallbackTooLarge { n: usize, limit: usize },

    #[error("relative error is undefined for a zero reference value")]
    ZeroReference,

    #[error("the entry mean mu must be nonzero (z = 1/mu)")]
    ZeroMean,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown distribution kind `{0}`")]
    UnknownDistribution(String),

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
