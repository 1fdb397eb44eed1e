use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coframe index {index} out of range for q = {q}")]
    IndexOutOfRange { index: usize, q: usize },
    #[error("multi-index {0:?} is not strictly increasing")]
    NotIncreasing(Vec<usize>),
    #[error("codimension {0} exceeds the supported maximum")]
    CodimensionTooLarge(usize),
    #[error("degree {degree} out of range for q = {q}")]
    DegreeOutOfRange { degree: usize, q: usize },
    #[error("metric: {0}")]
    NonSpdMetric(String),
    #[error("axis {0} is not an active coordinate")]
    AxisNotActive(usize),
    #[error("sample array of length {len} does not match grid shape {shape:?}")]
    ShapeMismatch { len: usize, shape: Vec<usize> },
    #[error("one-form is not closed (residual {residual:e})")]
    NotClosed { residual: f64 },
    #[error("model failed validation: {}", .0.summary())]
    Validation(Box<ValidationReport>),
    #[error("cannot compose {left} after {right}: degree mismatch")]
    DegreeMismatch { left: String, right: String },
    #[error("operator blocks belong to different models")]
    ModelMismatch,
    #[error("star involution needs even codimension, got q = {0}")]
    OddCodimension(usize),
    #[error("model has no transverse orientation")]
    NotOriented,
    #[error("requested {count} eigenvalues but the block has dimension {dim}")]
    CountTooLarge { count: usize, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerically unreliable: {0}")]
    Unreliable(String),
    #[error("tautness detectors disagree: harmonic count says {harmonic}, exactness says {exact}")]
    TautnessMismatch { harmonic: bool, exact: bool },
    #[error("inconsistent suspension input: {0}")]
    Suspension(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
