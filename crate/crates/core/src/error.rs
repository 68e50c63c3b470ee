use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} must lie in [{lo}, {hi}], got {value}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("element count along {axis} is not an integer: L/d_r = {ratio}")]
    ElementCountNotIntegral { axis: char, ratio: f64 },

    #[error("element index {index} out of range along {axis} (count {count})")]
    ElementIndexOutOfRange { axis: char, index: i64, count: u64 },

    #[error("probe step along {axis} is not commensurate: K*step = {product} is not a positive integer")]
    StepNotCommensurate { axis: char, product: f64 },

    #[error("probe step {step} spans the whole phase domain; no valid probe")]
    StepTooLarge { step: f64 },

    #[error("pilot budget too small: need at least {needed}, have {available}")]
    PilotBudget { needed: u64, available: u64 },

    #[error("mean estimate {index} is negative ({value}); received powers cannot average below zero")]
    NegativeMean { index: usize, value: f64 },

    #[error("axis inversion degenerate: no finite candidate pair")]
    NoFiniteCandidatePair,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
