use std::io;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{column}` in {source_name} header")]
    MissingColumn { source_name: String, column: String },

    #[error("malformed {field} at line {line}: {message}")]
    Field {
        line: u64,
        field: String,
        message: String,
    },

    #[error("unknown role at line {line}: `{value}`")]
    UnknownRole { line: u64, value: String },

    #[error("end_ms < start_ms at line {line}")]
    NegativeDuration { line: u64 },

    #[error("invalid AOI map: {0}")]
    AoiMap(String),

    #[error("invalid stage annotation: {0}")]
    Stage(String),

    #[error("input not sorted by start_ms at record {index}")]
    Unsorted { index: usize },

    #[error("records from more than one participant passed to a per-participant operation")]
    MixedParticipants,

    #[error("AOI label `{0}` is not in the AOI order")]
    UnknownAoi(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid statistics input: {0}")]
    Statistics(String),

    #[error("degenerate: all observations tied")]
    AllTied,

    #[error("invalid generator spec: {0}")]
    Generator(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
