use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("critical orbit escapes after {0} iterates; the postcritical set is unbounded")]
    EscapingOrbit(usize),

    #[error("point {0} does not escape: it lies inside or on the Julia set")]
    NotEscaping(num_complex::Complex64),

    #[error("branch resolution failed at level {level}, sample {sample}: preimages are equidistant")]
    BranchAmbiguity { level: usize, sample: usize },

    #[error("boundary sampling too coarse at level {level} ({samples} samples); raise the sample count")]
    SamplingResolution { level: usize, samples: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ray tracing failed for angle {angle}: {reason}")]
    RayTracing { angle: f64, reason: String },

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
