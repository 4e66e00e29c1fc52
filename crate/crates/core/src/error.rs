use thiserror::Error;

pub type Result<T> = std::result::Result<T, QslError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QslError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Bloch vector: |r|^2 = {norm_sq} exceeds 1")]
    InvalidState { norm_sq: f64 },

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    /// The decoherence function vanishes, so the rate γ = -k ṗ/p diverges.
    #[error("decoherence rate is singular at t = {t} (p(t) = 0)")]
    SingularRate { t: f64 },

    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    #[error("grid of {got} points is too coarse (need at least {min})")]
    GridTooCoarse { got: usize, min: usize },

    #[error("{what} did not converge")]
    NoConvergence { what: &'static str },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("negative radicand {value} in {what}")]
    NegativeRadicand { what: &'static str, value: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QslError {
    fn from(e: std::io::Error) -> Self {
        QslError::Io(e.to_string())
    }
}

impl From<csv::Error> for QslError {
    fn from(e: csv::Error) -> Self {
        QslError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QslError {
    fn from(e: serde_json::Error) -> Self {
        QslError::Io(e.to_string())
    }
}
