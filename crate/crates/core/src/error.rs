use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} candidate points, have {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("non-finite coordinate at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("side condition violated: {0}")]
    SideCondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation schedule undefined: {0}")]
    ScheduleUndefined(String),

    #[error("quadrature did not converge (value {value}, error estimate {error})")]
    Quadrature { value: f64, error: f64 },

    #[error("ground truth undefined: {0}")]
    OracleUndefined(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
