use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid feature groups: {0}")]
    InvalidGroups(String),

    #[error("invalid penalty configuration: {0}")]
    InvalidPenalty(String),

    #[error("invalid training configuration: {0}")]
    InvalidTrainConfig(String),

    #[error("non-finite gradient at index {index}: {value}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate}): loss is {loss}")]
    Divergence {
        epoch: usize,
        learning_rate: f64,
        loss: f64,
    },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("missing split `{0}`")]
    MissingSplit(&'static str),

    #[error("unpaired rows: {0:?}")]
    UnpairedRows(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error("infeasible generator parameters: {0}")]
    InfeasibleParameters(String),

    #[error("empty admissible grid")]
    EmptyGrid,

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = configuration error, 3 = data error, 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidPenalty(_)
            | Error::InvalidTrainConfig(_)
            | Error::EmptyGrid => 2,
            Error::NonFiniteGradient { .. }
            | Error::Divergence { .. }
            | Error::DegenerateModel(_) => 4,
            _ => 3,
        }
    }
}
