use thiserror::Error;

use crate::sim::trace::TraceRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix `{name}` is not symmetric positive definite")]
    NotPositiveDefinite { name: String },

    #[error("singular {what} at t = {t}: condition number {cond:e} (state {state:?})")]
    Singular {
        what: String,
        t: f64,
        cond: f64,
        state: Vec<f64>,
    },

    #[error("two-hop cover violated: agents {0} and {1} are neither neighbors nor share a neighbor")]
    UncoveredPair(usize, usize),

    #[error("newton iteration did not converge after {} iterations (residuals {residuals:?})", residuals.len())]
    NewtonDiverged { residuals: Vec<f64> },

    #[error("config parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("non-finite state at t = {t} in component {index}")]
    NonFinite {
        t: f64,
        index: usize,
        tail: Box<[TraceRecord]>,
    },

    #[error("empty metrics window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error("plot: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Unknown { .. } | Error::Trace(_) => 2,
            Error::Validation(_)
            | Error::Topology(_)
            | Error::NotPositiveDefinite { .. }
            | Error::Dimension(_)
            | Error::UncoveredPair(..) => 3,
            _ => 4,
        }
    }
}
