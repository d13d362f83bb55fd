use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewriteError {
    /// Style/argument mismatch (missing context, no demonstrations, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Transient transport failure; the retry policy applies.
    #[error("transport error: {0}")]
    Transport(String),

    /// Permanent provider rejection (authentication, bad request, ...).
    #[error("api error (status {status}): {detail}")]
    Api { status: u16, detail: String },

    /// The provider returned an empty completion.
    #[error("empty generation")]
    EmptyGeneration,

    /// More than the tolerated fraction of rewrite calls failed.
    #[error("{failed} of {total} rewrite calls failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Selector(#[from] car_selector::SelectorError),

    #[error(transparent)]
    Corpus(#[from] car_corpus::CorpusError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RewriteError {
    pub fn contract(detail: impl Into<String>) -> Self {
        RewriteError::Contract(detail.into())
    }

    /// Errors worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        matches!(self, RewriteError::Transport(_))
    }
}
