use thiserror::Error;

/// Errors from corpus loading, validation and persistence.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input, always with a 1-based line number.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    /// Identifier seen twice where uniqueness is required.
    #[error("duplicate identifier '{id}' at line {line}")]
    Duplicate { line: usize, id: String },

    /// Record violates a structural invariant (ranks, scores, labels).
    #[error("validation error: {detail}")]
    Validation { detail: String },
}

impl CorpusError {
    pub fn parse(line: usize, detail: impl Into<String>) -> Self {
        CorpusError::Parse {
            line,
            detail: detail.into(),
        }
    }

    pub fn validation(detail: impl Into<String>) -> Self {
        CorpusError::Validation {
            detail: detail.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
