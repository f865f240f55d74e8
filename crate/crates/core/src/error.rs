use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Every variant carries enough context to locate the failure; nothing is
/// silently clipped or replaced by a fallback value.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fractional order must lie in the open interval (0,1), got {0}")]
    InvalidOrder(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Mittag-Leffler series did not converge within {terms} terms at x = {x}")]
    SeriesNonConvergence { x: f64, terms: usize },

    #[error(
        "Volterra march lost positivity at node {node} (x = {x}, value = {value}); refine the grid"
    )]
    Positivity { node: usize, x: f64, value: f64 },

    #[error(
        "series and Volterra profiles disagree on the overlap window: |{series} - {volterra}| = {diff} at x = {x} exceeds {allowed}"
    )]
    OverlapMismatch {
        x: f64,
        series: f64,
        volterra: f64,
        diff: f64,
        allowed: f64,
    },

    #[error(
        "series reliable range [0, {reliable_end}] is too short for an overlap window on this grid"
    )]
    NoOverlap { reliable_end: f64 },

    #[error("profile invariant violated: {0}")]
    Invariant(String),

    #[error(
        "normalization error estimate {error} exceeds tolerance {tol}; extend x_max beyond {x_max}"
    )]
    NormalizationBracket { error: f64, tol: f64, x_max: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: achieved error {achieved}, requested {requested}")]
    Quadrature {
        a: f64,
        b: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("L^p tail is not controllable: {0}; use a larger X_big")]
    TailUncontrolled(String),

    #[error("norm at t = {t} is not positive ({norm}); use a finer evaluation grid")]
    NonPositiveNorm { t: f64, norm: f64 },

    #[error("datum error: {0}")]
    Datum(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Datum(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
