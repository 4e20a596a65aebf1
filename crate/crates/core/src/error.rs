use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("argument out of range: {0}")]
    Argument(String),

    #[error("unsupported ambient: {0}")]
    UnsupportedAmbient(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("degenerate immersion at {at:?}: gram determinant {gram_det:e}")]
    DegenerateImmersion { at: Vec<f64>, gram_det: f64 },

    #[error("quadrature did not converge after {levels} levels (last two values {previous} and {last})")]
    Convergence {
        levels: usize,
        previous: f64,
        last: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("mesh ingestion failed: {0}")]
    Mesh(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}
