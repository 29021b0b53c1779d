use alloc::string::String;

/// Errors raised by the rate kernel, the problem zoo and the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("argument {value} outside the domain [0, {tau}) of phi")]
    OutsideDomain { value: f64, tau: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integrability classification unavailable for tabulated phi; supply the flags explicitly")]
    ClassificationUnavailable,

    #[error("1/sqrt(phi) is not integrable near 0, the desingularization integral is undefined")]
    DesingularizationUndefined,

    #[error("1/phi is integrable near 0 but the operation requires a non-integrable modulus")]
    IntegrableModulus,

    #[error("value {value} lies outside the range of the inverse smoothing function (infimum {infimum}, supremum {supremum})")]
    OutsideRange { value: f64, infimum: f64, supremum: f64 },

    #[error("bisection failed to converge within bracket [{lo}, {hi}] after {iterations} iterations")]
    BisectionFailed { lo: f64, hi: f64, iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),

    #[error("index {index} out of range for {count} blocks/operators")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("stepsize schedule rejected: {0}")]
    Schedule(String),

    #[error("Lipschitz constants must be declared for custom objectives")]
    MissingLipschitz,

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
