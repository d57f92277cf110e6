//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition between cooperating calls was violated (e.g. asking a
    /// trajectory for a time it does not cover).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Adaptive quadrature failed to reach the requested tolerance within the
    /// subdivision budget. The partial estimate and its error bound are kept
    /// so callers can decide whether the result is still usable.
    #[error("quadrature for {context} did not converge: estimate {partial:e} +/- {error_estimate:e} after {subdivisions} subdivisions")]
    Quadrature {
        context: &'static str,
        partial: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    /// The ODE integrator could not meet the local tolerance without the step
    /// size collapsing below the resolvable limit.
    #[error("ODE step size underflow at t = {t}: required step {h:e} below minimum {h_min:e}")]
    StepSize { t: f64, h: f64, h_min: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
