use thiserror::Error;

/// Failures raised by the probe, network and Monte Carlo layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid cluster configuration: {0}")]
    InvalidConfig(String),

    #[error("dense oracle supports at most {max} entangled qubits, got {got}")]
    ResourceBound { max: usize, got: usize },

    #[error("observable derivative vanishes; phase variance is undefined")]
    DegenerateDerivative,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("combiner weights are identically zero")]
    ZeroWeights,

    #[error("autocorrelation model is singular (sigma^2 = {0})")]
    SingularModel(f64),

    #[error("invalid value {value} for sweep axis {axis}")]
    InvalidAxisValue { axis: String, value: f64 },

    #[error("need at least {needed} results, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
