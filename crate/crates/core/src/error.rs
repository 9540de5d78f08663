use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid array: {0}")]
    InvalidArray(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("channel vector is zero; test statistic undefined")]
    ZeroChannel,

    #[error("covariance rejected: {0}")]
    Covariance(String),

    #[error("beam problem has no selected bins")]
    EmptySelection,

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("episode aborted at pulse {pulse}: {source}")]
    Episode {
        pulse: usize,
        #[source]
        source: Box<Error>,
    },
}
