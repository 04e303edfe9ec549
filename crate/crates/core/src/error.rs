use crate::phase::PhaseState;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Non-finite energy, gradient or rate. Carries the state at which it
    /// was detected.
    #[error("integration failure: {reason}")]
    IntegrationFailure {
        reason: String,
        state: Box<PhaseState>,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate ladder: state {state} has zero total outgoing rate")]
    DegenerateLadder { state: usize },

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("decay fit failed: objective non-finite for every candidate")]
    FitFailure,

    #[error("all {0} tuning trials failed")]
    AllTrialsFailed(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn integration(reason: impl Into<String>, state: &PhaseState) -> Self {
        Error::IntegrationFailure {
            reason: reason.into(),
            state: Box::new(state.clone()),
        }
    }

    /// True for failures caused by the numerics rather than by the caller's
    /// input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. }
                | Error::DegenerateLadder { .. }
                | Error::EigenFailure(_)
                | Error::DegenerateSeries(_)
                | Error::FitFailure
                | Error::AllTrialsFailed(_)
        )
    }
}

/// A chain that stopped early. Keeps everything produced before the failure.
#[derive(Debug, Error)]
#[error("chain aborted after {} samples: {error}", samples.len())]
pub struct ChainAbort<T: std::fmt::Debug> {
    pub samples: Vec<T>,
    #[source]
    pub error: Error,
}
