use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("site {site} out of range for a lattice with {count} sites")]
    SiteOutOfRange { site: usize, count: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("site {site}: angle {angle} is not in the cell of label {label}")]
    ConstraintViolation { site: usize, angle: f64, label: usize },

    #[error("{states} configurations exceed the exact-enumeration limit of {limit}")]
    Guard { states: u128, limit: usize },

    #[error("normalizer underflow for configuration {row} (log-scale estimate {log_estimate:.1})")]
    Underflow { row: usize, log_estimate: f64 },

    #[error("reference measure is not stationary for the kernel (total variation {tv:.3e})")]
    NotStationary { tv: f64 },

    #[error("configuration {0} is never reached by the kernel")]
    ZeroReach(usize),

    #[error("angle of the zero vector is undefined")]
    UndefinedAngle,

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
