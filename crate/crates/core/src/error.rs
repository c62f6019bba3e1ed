use thiserror::Error;

/// Diagnostics carried by a rejection sampler that ran out of attempts.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BudgetReport {
    pub attempts: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub floor: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("degenerate measure: {0}")]
    Degenerate(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("acceptance budget exhausted after {} attempts ({} accepted, rate {:.3e} < floor {:.3e})", .0.attempts, .0.accepted, .0.acceptance_rate, .0.floor)]
    Budget(BudgetReport),
    #[error("tail target {target:.3e} not reached within radius {radius}: achieved {achieved:.3e}")]
    Truncation { target: f64, radius: f64, achieved: f64 },
    #[error("effective sample size {ess:.1} below floor {floor:.1}")]
    InsufficientEss { ess: f64, floor: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
