use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet size mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("divergence undefined: q[{index}] = 0 but p[{index}] = {p_val} > 0")]
    AbsoluteContinuityViolation { index: usize, p_val: f64 },

    #[error("sample {sample}: table assigns zero mass to symbol {index}")]
    SampleAbsoluteContinuity { sample: usize, index: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("message {index} assigns zero mass to the true symbol")]
    ZeroMassAtTruth { index: usize },

    #[error("empty input")]
    Empty,

    #[error("conditioning on a symbol with zero probability: {0}")]
    ZeroProbabilityConditioning(usize),

    #[error("alphabet product {0} exceeds the enumeration cap")]
    AlphabetTooLarge(usize),

    #[error("bin {bin} out of range (table has {bins} bins)")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("matrix dimension {n} exceeds kernel cap {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("row {0} of the outgoing message matrix has zero mass")]
    DegenerateRow(usize),

    #[error("could not reach target mutual information {target:.4} bits (closest {reached:.4})")]
    BisectionFailure { target: f64, reached: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
