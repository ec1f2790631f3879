use thiserror::Error;

/// Failures raised by the numerical kernels, the simulators and the fitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op} did not converge after {terms} terms")]
    Convergence { op: &'static str, terms: usize },

    #[error("{op} diverged: terms grew for {run} consecutive indices")]
    Divergence { op: &'static str, run: usize },

    #[error("{op} lost precision to cancellation (estimated absolute error {estimate:.3e})")]
    Cancellation { op: &'static str, estimate: f64 },

    #[error("{op} produced a value outside its range: {value}")]
    OutOfRange { op: &'static str, value: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("horizon too short: {updates} effective updates observed, need at least {needed}")]
    HorizonTooShort { updates: usize, needed: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("latency file: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures that stem from floating-point evaluation rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Divergence { .. }
                | Error::Cancellation { .. }
                | Error::OutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
