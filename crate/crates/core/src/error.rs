use alloc::boxed::Box;
use alloc::string::String;

use crate::inference::FitResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root finder did not reach tolerance after {iterations} iterations")]
    RootNotFound { iterations: usize },

    #[error("no positive observations")]
    NoPositive,

    #[error("no zero observations")]
    NoZeros,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The optimizer stopped at `max_iters`; `best` holds the best point found.
    #[error("optimizer did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error("sampler did not mix: {0}")]
    NonMixing(String),

    #[error("{failed} of {total} bootstrap replicates failed to converge")]
    TooManyFailures { failed: usize, total: usize },

    #[error("return level undefined: 1 - 1/{period} does not exceed the zero mass {pi}")]
    ReturnLevelUndefined { period: f64, pi: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical procedures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootNotFound { .. }
                | Error::NotConverged { .. }
                | Error::NonMixing(_)
                | Error::TooManyFailures { .. }
        )
    }
}
