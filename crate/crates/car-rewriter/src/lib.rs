//! Query rewriting at training time: the prompt templates for every
//! rewrite style, an OpenAI-compatible chat client with retrying, two
//! deterministic mocks (fixture-keyed and context-echoing), and the loop
//! that rewrites a training batch into its rewritten counterpart.

pub mod client;
pub mod dataset;
pub mod error;
pub mod mock;
pub mod prompt;

pub use client::{rewrite, ChatClient, CountingClient, HttpChatClient, RetryPolicy};
pub use dataset::{rewrite_dataset, RewriteDatasetConfig, RewriteOutcome};
pub use error::RewriteError;
pub use mock::{ContextEchoClient, FlakyClient, MockFixtureClient};
pub use prompt::{
    build_prompt, default_few_shot, truncate_context, ChatMessage, ChatRequest, ChatResponse,
    ChatUsage, FewShotExample, GenerationParams, PromptKind, PromptStyle, Role,
    CONTEXT_CHAR_BUDGET,
};
