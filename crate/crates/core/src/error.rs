use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    /// `row` counts data rows from 0, header excluded.
    #[error("data row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no usable weak learner: {0}")]
    NoUsableLearner(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("unknown dataset `{0}` (expected one of adult, bank, compass, kdd)")]
    UnknownDataset(String),

    #[error("split {split}: {source}")]
    Split {
        split: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI's error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Row { .. } => "row",
            Error::Degenerate(_) => "degenerate_dataset",
            Error::UndefinedRate(_) => "undefined_rate",
            Error::LengthMismatch(_) => "length_mismatch",
            Error::EmptyInput(_) => "empty_input",
            Error::Config(_) => "config",
            Error::NoUsableLearner(_) => "no_usable_learner",
            Error::DegenerateModel(_) => "degenerate_model",
            Error::UnknownDataset(_) => "unknown_dataset",
            Error::Split { source, .. } => source.code(),
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
