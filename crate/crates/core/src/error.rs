use thiserror::Error;

/// Errors produced by the fitting, ingestion and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Too few distinct training sizes to identify the three curve parameters.
    #[error("insufficient data: need at least {needed} distinct n values, found {found}")]
    InsufficientData { needed: usize, found: usize },

    /// Generic input validation failure (out-of-range values, bad config).
    #[error("validation error: {0}")]
    Validation(String),

    /// A malformed row in an experiments file.
    #[error("line {line}: invalid field `{field}`: {message}")]
    Row {
        line: u64,
        field: String,
        message: String,
    },

    /// A malformed element of a JSON experiments array (1-based index).
    #[error("record {record}: invalid field `{field}`: {message}")]
    Record {
        record: u64,
        field: String,
        message: String,
    },

    #[error("duplicate experiment key (pathology={pathology}, model={model}, n_cases={n_cases}, seed={seed})")]
    DuplicateKey {
        pathology: String,
        model: String,
        n_cases: u32,
        seed: u64,
    },

    /// A metric that has no value for the given input (e.g. a single-class ROC-AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
