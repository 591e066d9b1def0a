use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("matrix exponential would overflow: log-norm bound {0:.3e} exceeds 700")]
    OverflowRisk(f64),
    #[error("matrix is not Hurwitz: spectral abscissa {0} >= 0")]
    NotHurwitz(f64),
    #[error("horizon {horizon} shorter than required {required}")]
    HorizonTooShort { horizon: f64, required: f64 },
    #[error("dimension {0} too large for the dense eigensolver; supply an envelope")]
    EnvelopeRequired(usize),
    #[error("argument fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("schedule step {0} must be positive")]
    BadStep(f64),
    #[error("value {value} outside the map domain [0, 1]")]
    OutOfDomain { value: f64 },
    #[error("value {value} exceeds the inverse-branch range mu/4 = {max}")]
    OutOfRange { value: f64, max: f64 },
    #[error("map parameter mu = {0} outside (0, 4]")]
    BadParameter(f64),
    #[error("backward preimage left the branch domain at k = {k}")]
    BranchEscape { k: i64 },
    #[error("orbit did not converge: {0}")]
    NoConvergence(String),
    #[error("index ranges differ: {0}..={1} vs {2}..={3}")]
    RangeMismatch(i64, i64, i64, i64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("nonlinearity contract violated: {0}")]
    ContractViolated(String),
    #[error("assumption failed: {0}")]
    AssumptionFailure(String),
    #[error("inner fixed point on interval {k} did not reach {tol:e} in {iters} iterations")]
    InnerDivergence { k: i64, tol: f64, iters: usize },
    #[error("picard iteration did not reach {tol:e} in {iters} iterations")]
    PicardDivergence { tol: f64, iters: usize },
    #[error("truncation pad of {pad} intervals leaves bound {bound:e} above accuracy {accuracy:e}")]
    PadTooSmall { pad: usize, bound: f64, accuracy: f64 },
    #[error("driver covers {have_lo}..={have_hi} but the solve needs {need_lo}..={need_hi}")]
    DriverTooShort { have_lo: i64, have_hi: i64, need_lo: i64, need_hi: i64 },
    #[error("trajectory grids differ")]
    GridMismatch,
    #[error("only {0} usable points in the fitted tail (need 10)")]
    DegenerateTail(usize),
    #[error("sequence-level premise failed: {0}")]
    PremiseFailure(String),
    #[error("invalid window: {0}")]
    BadWindow(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation { field: field.to_string(), message: message.into() }
    }
}
