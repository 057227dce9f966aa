use thiserror::Error;

/// Errors raised by the core toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {value} outside supported range {min}..={max}")]
    DimensionOutOfRange { value: usize, min: usize, max: usize },

    #[error("argument `{name}` = {value} outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("field has {got} entries, mesh expects {expected}")]
    FieldMismatch { expected: usize, got: usize },

    #[error("nonpositive density: min value {0}")]
    NonpositiveDensity(f64),

    #[error("degenerate integral `{0}` (zero or non-finite)")]
    DegenerateIntegral(&'static str),

    #[error("missing curvature data for mode {0}")]
    MissingCurvature(&'static str),

    #[error("incompatible Neumann data: residual {residual:e} exceeds {tolerance:e}")]
    Incompatible { residual: f64, tolerance: f64 },

    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("sample is not in the contact set (psd slack {0:e})")]
    NotInContactSet(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
