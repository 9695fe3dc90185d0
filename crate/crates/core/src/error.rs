use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Every particle weight underflowed to zero (or was not finite).
    #[error("degenerate particle cloud at t={time}: no particle carries positive finite weight")]
    DegenerateCloud { time: usize },

    /// A categorical distribution was requested over weights that are all zero.
    #[error("cannot sample from all-zero (or non-finite) weights")]
    DegenerateWeights,

    /// Every backward weight for a target particle vanished.
    #[error("target particle {} at t={time} is unreachable under the transition density",
        target.map_or_else(|| "?".to_string(), |t| t.to_string()))]
    UnreachableTarget { time: usize, target: Option<usize> },

    /// Accept-reject sampling needs a finite bound on the transition density.
    #[error("transition density bound must be positive and finite for accept-reject sampling, got {0}")]
    UnboundedTransition(f64),

    #[error("path of length {path_len} needs {needed} terms but the functional only defines {available}")]
    HorizonMismatch {
        path_len: usize,
        needed: usize,
        available: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed report input: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
