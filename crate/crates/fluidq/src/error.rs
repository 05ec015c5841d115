use thiserror::Error;

/// Errors produced by model construction, simulation and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter violates its constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The offered load (drift + jump input + repair input) reaches or
    /// exceeds the service rate, so no stationary regime exists.
    #[error("unstable model: {0}")]
    Unstable(String),

    /// A function was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerics fault: {0}")]
    Numerics(String),

    /// A simulation exceeded its event cap and was censored.
    #[error("event cap of {cap} reached after t = {time}")]
    EventCapReached { cap: u64, time: f64 },

    /// An operation was invoked in a way its inputs do not support.
    #[error("usage error: {0}")]
    Usage(String),

    /// Laplace inversion produced a non-finite intermediate value.
    #[error("laplace inversion produced a non-finite value at x = {x}")]
    NonFiniteInversion { x: f64 },

    /// Experiment configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
