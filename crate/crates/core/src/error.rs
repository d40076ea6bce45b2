use thiserror::Error;

/// Errors raised by the algebra, matrix-tuple and realization layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable x{index} out of range for alphabet size {d}")]
    VariableOutOfRange { index: usize, d: usize },

    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("word count {count} exceeds cap {cap}")]
    WordCap { count: u128, cap: usize },

    #[error("degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("matrix is singular to tolerance (reciprocal condition {rcond:e})")]
    Singular { rcond: f64 },

    #[error("matrix is not an isometry: |V*V - I| = {defect:e}")]
    NotIsometry { defect: f64 },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("point outside the domain: |Q(z)| = {norm}")]
    OutsideDomain { norm: f64 },

    #[error("colligation is not contractive: |U| = {norm}")]
    NotContractive { norm: f64 },

    #[error("colligation flagged unitary but |U*U - I| = {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("Schur-Agler bound violated: |f(z)| = {norm}")]
    SchurBound { norm: f64 },

    #[error("stabilization not reached within degree cap {cap}; ranks {ranks:?}")]
    StabilizationCap { cap: usize, ranks: Vec<usize> },

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
