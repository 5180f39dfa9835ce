use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero value at index {index}: percentage change undefined")]
    ZeroValue { index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("verticality {verticality} too close to 1: recurrent formula undefined")]
    NonForecastable { verticality: f64 },

    #[error("bootstrap unstable: {dropped} of {total} replicates dropped")]
    BootstrapUnstable { dropped: usize, total: usize },

    #[error("numerical failure at t = {t}: {what}")]
    Numerical { t: usize, what: String },

    #[error("baseline RMSE is zero while challenger RMSE is {numerator}")]
    InfiniteRatio { numerator: f64 },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("series too short: {len} observations, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
