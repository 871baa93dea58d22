use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empirical variogram is empty: no pairs within max lag {max_lag} m")]
    EmptyVariogram { max_lag: f64 },

    #[error("duplicate locations: {}", .0.join(", "))]
    DuplicateLocation(Vec<String>),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("kriging variance {0} is below the roundoff tolerance")]
    NegativeVariance(f64),

    #[error("no stations within {radius} m of target")]
    NoNeighbors { radius: f64 },

    #[error("insufficient history: time index {t} needs {lags} lags")]
    InsufficientHistory { t: usize, lags: usize },

    #[error("constant channel {0} on the fit subset")]
    ConstantChannel(usize),

    #[error("R² undefined: observations have zero variance")]
    UndefinedR2,

    #[error("time axis mismatch: {0}")]
    Alignment(String),

    #[error("training diverged: {0}")]
    NonFinite(String),

    /// A training step attempted to read data outside its permitted window.
    #[error("leakage: {0}")]
    Leakage(String),

    #[error("corrupt grid stack: {0}")]
    CorruptFile(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
