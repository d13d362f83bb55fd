use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error(transparent)]
    Grad(#[from] car_grad::GradError),

    #[error(transparent)]
    Corpus(#[from] car_corpus::CorpusError),

    /// Precondition violated by the caller (empty token sequence, empty
    /// training set, and similar).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SelectorError {
    pub fn contract(detail: impl Into<String>) -> Self {
        SelectorError::Contract(detail.into())
    }
}
