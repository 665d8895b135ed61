use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state at integration step {step}")]
    NonFinite { step: u64 },

    #[error("grid mismatch: trajectory step {traj_step} is not the return step {delta} or an integer divisor of it")]
    GridMismatch { traj_step: f64, delta: f64 },

    #[error("series too short: length {len}, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("degenerate series: zero dispersion, cannot resolve a threshold")]
    DegenerateSeries,

    #[error("power-law fit needs at least {min} usable bins, got {usable}")]
    InsufficientBins { usable: usize, min: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {what}")]
    Parse {
        path: String,
        line: usize,
        what: String,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
