//! Error type shared by all solver modules.

use thiserror::Error;

/// One Newton iteration as recorded in a failure trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonRecord {
    pub iteration: usize,
    /// Scaled max-norm of the residual before the update.
    pub residual: f64,
    /// Line-search damping factor applied to the update.
    pub damping: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Scalar inversion (eta, H^-1, r^-1) failed to converge.
    #[error("scalar inversion failed for target {target}: bracket [{lo}, {hi}], residual {residual:e}")]
    Inversion {
        target: f64,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("nonlinear solve did not converge after {} iterations (last residual {:e})", .trace.len(), .trace.last().map_or(f64::NAN, |r| r.residual))]
    NewtonFailure { trace: Vec<NewtonRecord> },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("time level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
