//! Chat-completion client contract, the retrying `rewrite` call, and the
//! HTTP implementation for OpenAI-compatible endpoints.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use car_corpus::Query;
use serde::Deserialize;

use crate::error::RewriteError;
use crate::prompt::{
    build_prompt, ChatRequest, ChatResponse, ChatUsage, GenerationParams, PromptStyle,
};

/// A chat-completion backend. Implementations must be safe for concurrent
/// use; `rewrite_dataset` fans out over threads.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, RewriteError>;
}

/// Exponential backoff for transient failures: waits
/// `base_delay * factor^attempt` between tries, at most `max_attempts`
/// tries in total.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_secs(1),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Zero-delay variant for tests and mock-backed runs.
    pub fn immediate() -> Self {
        RetryPolicy {
            base_delay: Duration::ZERO,
            factor: 2,
            max_attempts: 5,
        }
    }

    fn delay_before(&self, attempt: u32) -> Duration {
        self.base_delay * self.factor.saturating_pow(attempt - 1)
    }
}

/// One rewrite call: build the prompt, ask the client, retry transient
/// failures with exponential backoff, and return the trimmed rewrite.
pub fn rewrite(
    client: &dyn ChatClient,
    style: &PromptStyle,
    params: &GenerationParams,
    query: &Query,
    context: Option<&str>,
    policy: &RetryPolicy,
) -> Result<String, RewriteError> {
    let request = build_prompt(style, params, query, context)?;
    let mut last_err = None;
    for attempt in 1..=policy.max_attempts.max(1) {
        match client.complete(&request) {
            Ok(response) => {
                let text = response.text.trim().to_string();
                if text.is_empty() {
                    return Err(RewriteError::EmptyGeneration);
                }
                return Ok(text);
            }
            Err(e) if e.is_transient() && attempt < policy.max_attempts => {
                std::thread::sleep(policy.delay_before(attempt));
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| RewriteError::Transport("no attempts made".into())))
}

/// Wrapper counting every completion call; the inference-efficiency checks
/// assert this stays at zero through `rerank`.
pub struct CountingClient {
    inner: Arc<dyn ChatClient>,
    calls: Arc<AtomicU64>,
}

impl CountingClient {
    pub fn new(inner: Arc<dyn ChatClient>) -> Self {
        CountingClient {
            inner,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Shared handle to the call counter.
    pub fn counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.calls)
    }
}

impl ChatClient for CountingClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, RewriteError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Blocking HTTP client for OpenAI-style `/chat/completions` endpoints.
pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u32,
    #[serde(default)]
    completion_tokens: u32,
    #[serde(default)]
    total_tokens: u32,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, RewriteError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| RewriteError::Transport(e.to_string()))?;
        Ok(HttpChatClient {
            endpoint: endpoint.into(),
            api_key,
            http,
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, RewriteError> {
        let mut builder = self.http.post(&self.endpoint).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| RewriteError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(RewriteError::Transport(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(RewriteError::Api {
                status: status.as_u16(),
                detail: response.text().unwrap_or_default(),
            });
        }
        let wire: WireResponse = response
            .json()
            .map_err(|e| RewriteError::Transport(format!("malformed response: {e}")))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or(RewriteError::EmptyGeneration)?;
        let usage = wire.usage.unwrap_or_default();
        Ok(ChatResponse {
            text: choice.message.content,
            finish_reason: choice.finish_reason.unwrap_or_else(|| "stop".into()),
            usage: ChatUsage {
                prompt_tokens: usage.prompt_tokens,
                completion_tokens: usage.completion_tokens,
                total_tokens: usage.total_tokens,
            },
        })
    }
}
