use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("N must exceed 1, got {0}")]
    ModulusArgument(f64),
    #[error("expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("stencil vector {vector:?} does not fit in a {cols}x{rows} grid")]
    UnderResolved {
        vector: [i32; 2],
        cols: usize,
        rows: usize,
    },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("no sign change for beta in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("cover too coarse: sum r^beta = {sum:e} but delta^2/M = {limit:e}")]
    CoverTooCoarse { sum: f64, limit: f64 },
    #[error("resolution h = {h} exceeds epsilon/8 = {limit}")]
    Resolution { h: f64, limit: f64 },
    #[error("table gap of {gap} rad around angle {angle} exceeds {max_gap}")]
    TableGap { angle: f64, gap: f64, max_gap: f64 },
    #[error("not enough table entries near the reference direction: {found} < {needed}")]
    InsufficientNeighbors { found: usize, needed: usize },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NotConverged { .. } | Error::Linear(_) | Error::NoBracket { .. } | Error::Io(_)
        )
    }
}
