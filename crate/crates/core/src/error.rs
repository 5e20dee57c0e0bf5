use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// One entry per violated invariant.
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("this bound requires f >= 1")]
    FaultBoundTooSmall,

    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("event scheduled in the past (at {at} us, now {now} us)")]
    SchedulingInPast { at: u64, now: u64 },

    #[error("scenario file: {0}")]
    ScenarioFormat(#[from] toml::de::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed result csv: {0}")]
    ResultFormat(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(vec![msg.into()])
    }
}
