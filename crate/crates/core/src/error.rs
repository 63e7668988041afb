use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("peak-power constraint violated at input {index}: |x|^2 = {power} > {snr}")]
    PeakConstraint { index: usize, power: f64, snr: f64 },

    #[error("channel matrix is rank deficient (smallest/largest singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    /// A line search hit its iteration cap. Carries the best point seen.
    #[error("{what} did not converge after {iterations} iterations (best x = {best_x}, f = {best_value})")]
    OptimizationFailure {
        what: &'static str,
        iterations: usize,
        best_x: f64,
        best_value: f64,
    },

    #[error("forward recursion underflow at step {step}: quantizer too coarse for this SNR")]
    NumericUnderflow { step: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 2 for numerical failures, 1 for everything the
    /// caller can fix by changing the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OptimizationFailure { .. }
            | Error::NumericUnderflow { .. }
            | Error::Quadrature { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
