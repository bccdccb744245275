use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("direction is not a unit vector (|w| = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0:?} is outside the domain of definition")]
    OutsideDomain(Vec<f64>),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no maximizer exists on balls: {0}")]
    NoMaximizer(String),

    #[error("non-finite integrand value {value} at node {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
