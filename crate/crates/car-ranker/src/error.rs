use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankerError {
    #[error(transparent)]
    Grad(#[from] car_grad::GradError),

    #[error(transparent)]
    Corpus(#[from] car_corpus::CorpusError),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RankerError {
    pub fn contract(detail: impl Into<String>) -> Self {
        RankerError::Contract(detail.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RankerError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
