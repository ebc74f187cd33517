use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: unknown location id `{id}`")]
    UnknownLocation { line: usize, id: String },

    #[error("line {line}: timestamp {timestamp} is not aligned to the {interval_secs}s tick grid")]
    OffGrid {
        line: usize,
        timestamp: String,
        interval_secs: i64,
    },

    #[error("line {line}: duplicate snapshot for ({location}, {timestamp})")]
    DuplicateSnapshot {
        line: usize,
        location: String,
        timestamp: String,
    },

    #[error("invalid catalog: {0}")]
    Catalog(String),

    #[error("invalid trend name: {0}")]
    TrendName(String),

    #[error("unknown trend `{0}`")]
    UnknownTrend(String),

    #[error("node `{0}` has zero strength in the requested orientation")]
    ZeroStrength(String),

    #[error("no arc {0} -> {1}")]
    NoSuchArc(String, String),

    #[error("network is not weakly connected even with every arc retained")]
    Disconnected,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from the input data (as opposed to a bug or an
    /// environment failure). The CLI maps these to distinct exit codes.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Serialization(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
