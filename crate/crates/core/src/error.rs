use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes or lengths of the inputs do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The log-density evaluated to NaN during sampling.
    #[error("log-density returned NaN in chain {chain} at iteration {iteration}")]
    NanLogDensity { chain: usize, iteration: usize },

    /// No finite starting point could be found.
    #[error("could not find a finite initial point for chain {chain} after {attempts} attempts")]
    Initialization { chain: usize, attempts: usize },

    /// Sampling finished but the R-hat gate was not met.
    #[error("{stage} failed the convergence gate (max R-hat {max_rhat:.4} > {gate}): {}", format_rhat(.rhat))]
    NotConverged {
        stage: String,
        gate: f64,
        max_rhat: f64,
        rhat: Vec<(String, f64)>,
    },

    /// Too many inner refinement runs diverged.
    #[error("{dropped} of {total} refinement runs diverged (limit 5%)")]
    RefinementDiverged { dropped: usize, total: usize },

    /// The ODE integration produced a non-finite state.
    #[error("SIR solver produced a non-finite state at t = {time}")]
    Solver { time: f64 },

    /// A CSV row could not be ingested.
    #[error("{path}: row {row}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_rhat(rhat: &[(String, f64)]) -> String {
    rhat.iter()
        .filter(|(_, r)| !r.is_finite() || *r > 1.0)
        .map(|(n, r)| format!("{n}={r:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
