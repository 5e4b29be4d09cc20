use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension N must be at least 1 (got {0})")]
    InvalidDimension(i64),
    #[error("b = {b} must satisfy 0 < b < min(2, N) = {limit}")]
    BOutOfRange { b: f64, limit: f64 },
    #[error("q = {q} is too small ({requirement})")]
    QTooSmall { q: f64, requirement: &'static str },
    #[error("p = {p} must satisfy 2 < p < {upper}")]
    POutOfRange { p: f64, upper: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has negative values")]
    NegativeValues,
    #[error("field has non-finite values")]
    NonFiniteField,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("no convergence after {iterations} iterations ({detail})")]
    NoConvergence { iterations: usize, detail: String },
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("shooting bracket not found on [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("ODE integration failed: {0}")]
    StiffFailure(String),
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("degenerate fiber components (a2*aq*ap = 0)")]
    DegenerateComponents,
    #[error("energy became non-finite")]
    NonFiniteEnergy,
    #[error("check hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
