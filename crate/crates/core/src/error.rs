use thiserror::Error;

/// Errors raised by the decoding, correction and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("variance `{name}` must be positive and finite, got {value}")]
    NonPositiveVariance { name: String, value: f64 },

    #[error("singular innovation variance {value} at step {step}")]
    SingularInnovation { step: usize, value: f64 },

    #[error("degenerate input: `{sum}` vanished")]
    Degenerate { sum: &'static str },

    #[error("position {z} lies outside subspace [{lo}, {hi}]")]
    OutOfSubspace { z: f64, lo: f64, hi: f64 },

    #[error("metric `{metric}` is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },

    #[error("log-likelihood became non-finite at EM iteration {iter}")]
    NonFiniteLikelihood { iter: usize },

    #[error("re-decoding failed: {0}")]
    Redecode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
