//! CLI-level error taxonomy, mapped onto process exit codes:
//! 0 success, 1 usage, 2 data, 3 transport.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("transport error: {0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }

    pub fn usage(detail: impl Into<String>) -> Self {
        CliError::Usage(detail.into())
    }

    pub fn data(detail: impl Into<String>) -> Self {
        CliError::Data(detail.into())
    }
}

impl From<car_corpus::CorpusError> for CliError {
    fn from(e: car_corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<car_grad::GradError> for CliError {
    fn from(e: car_grad::GradError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<car_selector::SelectorError> for CliError {
    fn from(e: car_selector::SelectorError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<car_ranker::RankerError> for CliError {
    fn from(e: car_ranker::RankerError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<car_rewriter::RewriteError> for CliError {
    fn from(e: car_rewriter::RewriteError) -> Self {
        use car_rewriter::RewriteError as R;
        match &e {
            R::Transport(_) | R::TooManyFailures { .. } | R::Api { .. } => {
                CliError::Transport(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
