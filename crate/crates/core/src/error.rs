//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by elicitation, calibration and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A truncated distribution has (numerically) no mass left above its bound.
    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    /// A bin of the discrete Kullback-Leibler loss has non-positive effective mass.
    #[error("degenerate bin {index}: effective mass {mass}")]
    DegenerateBin { index: usize, mass: f64 },

    /// The joint prior would be improper.
    #[error("propriety violation: {0}")]
    Propriety(String),

    /// Priors that cannot be combined (e.g. different shape truncation).
    #[error("incompatible priors: {0}")]
    Incompatible(String),

    /// Importance weights collapsed; the caller should draw a new anchored sample.
    #[error("importance sample degenerate: effective sample size {ess:.1} below {min}")]
    Reanchor { ess: f64, min: f64 },

    /// A root finder or optimizer failed.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Posterior sampling failed.
    #[error("inference failure: {0}")]
    Inference(String),

    /// Maximum likelihood fit failed.
    #[error("fit failure: {message} (trace: {trace:?})")]
    Fit { message: String, trace: Vec<f64> },

    /// Malformed input file or record.
    #[error("parse error: {0}")]
    Parse(String),

    /// Invalid expert specification.
    #[error("invalid expert specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
