use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Each variant maps to a stable, machine-parsable code (see [`Error::code`])
/// which the CLI prints in front of the human-readable message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("invalid rewrite table {origin}: {message}")]
    InvalidTable { origin: String, message: String },

    #[error("duplicate lexicon category {name:?}")]
    DuplicateCategory { name: String },

    #[error("{origin}:{line}: expected {expected} values, found {found}")]
    RaggedDimension {
        origin: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate id {id:?}{}", location(.origin, *.line))]
    DuplicateId {
        id: String,
        origin: String,
        line: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("label ranking requires scores for every sample")]
    MissingScores,

    #[error("unknown label {name:?} for taxonomy {taxonomy}")]
    UnknownLabel { name: String, taxonomy: String },

    #[error("unknown or ambiguous taxonomy: {0}")]
    UnknownTaxonomy(String),

    #[error("{origin}:{line}: cannot parse timestamp {value:?}")]
    Timestamp {
        origin: String,
        line: usize,
        value: String,
    },

    /// `what` says which file lacks the ids.
    #[error("ids missing from {what}: {}", .ids.join(", "))]
    MissingIds { what: String, ids: Vec<String> },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("requested {requested} terms but the vocabulary holds {available}")]
    TooManyTerms { requested: usize, available: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn location(origin: &str, line: usize) -> String {
    if origin.is_empty() {
        String::new()
    } else {
        format!(" at {origin}:{line}")
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    /// Stable identifier used by the CLI's single-line error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } => "E_PARSE",
            Error::InvalidTable { .. } => "E_TABLE",
            Error::DuplicateCategory { .. } => "E_DUPLICATE_CATEGORY",
            Error::RaggedDimension { .. } => "E_RAGGED",
            Error::DuplicateId { .. } => "E_DUPLICATE_ID",
            Error::DimensionMismatch { .. } => "E_DIMENSION",
            Error::ShapeMismatch { .. } => "E_SHAPE",
            Error::EmptyInput(_) => "E_EMPTY",
            Error::MissingScores => "E_MISSING_SCORES",
            Error::UnknownLabel { .. } => "E_UNKNOWN_LABEL",
            Error::UnknownTaxonomy(_) => "E_TAXONOMY",
            Error::Timestamp { .. } => "E_TIMESTAMP",
            Error::MissingIds { .. } => "E_MISSING_IDS",
            Error::Checkpoint(_) => "E_CHECKPOINT",
            Error::Config(_) => "E_CONFIG",
            Error::TooManyTerms { .. } => "E_TOO_MANY_TERMS",
            Error::Json(_) => "E_JSON",
            Error::Csv(_) => "E_CSV",
        }
    }
}
