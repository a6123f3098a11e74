use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cell {index} has non-positive probability {value}")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("a scheme needs at least one cell")]
    EmptyScheme,
    #[error("power exponent {0} outside [0, 1]")]
    ExponentOutOfRange(f64),
    #[error("lambda = {0} is outside the supported range")]
    LambdaOutOfRange(f64),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("g_lambda is undefined for negative argument {0}")]
    NegativeArgument(f64),
    #[error("expected {expected} cells, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("counts total {found}, expected n = {expected}")]
    CountTotal { expected: u64, found: u64 },
    #[error("cell index {index} out of range for r = {r}")]
    IndexOutOfRange { index: usize, r: usize },
    #[error("level m = {m} needs n >= {required}, got n = {n}")]
    OrderExceedsTrials { n: u64, m: u64, required: u64 },
    #[error("occupancy level m must be at least 1")]
    ZeroOrder,
    #[error("weight h at cell {index} is not strictly positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("variance of the remainder must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error("Poisson mean must be non-negative, got {0}")]
    NegativeMean(f64),
    #[error("Poisson mean is zero; the Gaussian bound is undefined")]
    ZeroMean,
    #[error("sample set is empty")]
    EmptySamples,
    #[error("samples must be sorted ascending and free of NaN")]
    UnsortedSamples,
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("cannot build alias table: {0}")]
    AliasTable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
