use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("step size underflow at r = {r:e} (v = {v:e}, logu = {logu:e})")]
    StepSizeUnderflow { r: f64, v: f64, logu: f64 },
    #[error("both bracket amplitudes classify as {0}; widen the bracket")]
    SameClassification(String),
    #[error("no ground state detected: {0}")]
    NoGroundState(String),
    #[error("radius {r:e} outside grid [{lo:e}, {hi:e}]")]
    OutOfGrid { r: f64, lo: f64, hi: f64 },
    #[error("window [{lo:e}, {hi:e}] outside grid [{grid_lo:e}, {grid_hi:e}]")]
    WindowOutsideGrid {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },
    #[error("wrong chart: expected {expected}, found {found}")]
    WrongChart { expected: String, found: String },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("series built for different parameters")]
    SeriesMismatch,
    #[error("pole: 1 - gamma r^-delta = {0:e} <= 0")]
    Pole(f64),
    #[error("insufficient stencil at index {0}")]
    InsufficientStencil(usize),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("comparison precondition violated: {0}")]
    BoundaryOrdering(String),
    #[error("no valid delta: {0}")]
    NoValidDelta(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
