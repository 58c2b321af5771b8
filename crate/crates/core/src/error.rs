use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query radius {radius} is below the measure resolution r_min = {r_min}")]
    SubResolution { radius: f64, r_min: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("measure is empty")]
    EmptyMeasure,

    #[error("kernel validation failed: {0}")]
    KernelValidation(String),

    #[error("point {point} does not belong to cell {cell}")]
    NotInCell { point: usize, cell: usize },

    #[error("unknown cell id {0}")]
    UnknownCell(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
