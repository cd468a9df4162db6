use thiserror::Error;

/// Errors produced by parameter validation, the analytic models and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("protocol constraint violated: {0}")]
    ProtocolConstraint(String),

    #[error("no sign change between {lo_km} km and {hi_km} km; root is not bracketed")]
    NotBracketed { lo_km: f64, hi_km: f64 },

    #[error("livelock at t = {time} s: event queue drained with {successes} of {target} successes")]
    Livelock {
        time: f64,
        successes: u64,
        target: u64,
    },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that come from malformed input files rather than from
    /// physically invalid values.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }

    /// True for failures of the simulation run itself or of I/O.
    pub fn is_runtime(&self) -> bool {
        match self {
            Error::Livelock { .. } | Error::Io(_) => true,
            Error::Replication { source, .. } => source.is_runtime(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
