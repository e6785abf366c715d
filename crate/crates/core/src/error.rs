use kmsbound_conic::ConicError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("line {line}: {msg}")]
    ParseAt { line: usize, msg: String },
    #[error("operator support outside window: {0}")]
    OutsideWindow(String),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("invalid interaction: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("interaction terms do not commute")]
    NotCommuting,
    #[error("image of A is not contained in image of B (eigenvalue {eigenvalue:e} of B along a direction where A has weight {weight:e})")]
    Support { eigenvalue: f64, weight: f64, vector: Vec<num_complex::Complex64> },
    #[error("matrix size mismatch: {0}")]
    SizeMismatch(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
