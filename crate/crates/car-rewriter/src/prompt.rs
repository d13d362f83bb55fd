//! Prompt construction for every rewrite style, and the chat wire types.
//!
//! `build_prompt` is a pure function of (style, params, query, context):
//! the same arguments always produce byte-identical requests, which is what
//! makes fixture-keyed mocking and the golden-file tests possible.

use car_corpus::{split_sentences, Query};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RewriteError;

/// Generation hyperparameters sent with every request. Defaults:
/// temperature 0.5, presence penalty 0.6, frequency penalty 0.8, and a
/// 35-token cap (128 for the pseudo-document style).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub presence_penalty: f64,
    pub frequency_penalty: f64,
    pub model_name: String,
}

impl GenerationParams {
    pub fn defaults_for(kind: PromptKind, model_name: impl Into<String>) -> Self {
        GenerationParams {
            temperature: 0.5,
            max_tokens: if kind == PromptKind::PseudoDocument {
                128
            } else {
                35
            },
            presence_penalty: 0.6,
            frequency_penalty: 0.8,
            model_name: model_name.into(),
        }
    }

    pub fn validate(&self) -> Result<(), RewriteError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(RewriteError::contract(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(RewriteError::contract("max_tokens must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    CarContext,
    InContext,
    Prompt1,
    Prompt2,
    PseudoDocument,
}

impl PromptKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptKind::CarContext => "car_context",
            PromptKind::InContext => "in_context",
            PromptKind::Prompt1 => "prompt1",
            PromptKind::Prompt2 => "prompt2",
            PromptKind::PseudoDocument => "pseudo_document",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RewriteError> {
        match s {
            "car_context" => Ok(PromptKind::CarContext),
            "in_context" => Ok(PromptKind::InContext),
            "prompt1" => Ok(PromptKind::Prompt1),
            "prompt2" => Ok(PromptKind::Prompt2),
            "pseudo_document" => Ok(PromptKind::PseudoDocument),
            other => Err(RewriteError::contract(format!(
                "unknown prompt style '{other}'"
            ))),
        }
    }

    pub fn all() -> [PromptKind; 5] {
        [
            PromptKind::CarContext,
            PromptKind::InContext,
            PromptKind::Prompt1,
            PromptKind::Prompt2,
            PromptKind::PseudoDocument,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub query: String,
    pub description: String,
}

/// Default demonstrations shipped with the crate; an editable JSON list of
/// (query, description) pairs.
pub fn default_few_shot() -> Vec<FewShotExample> {
    serde_json::from_str(include_str!("../assets/few_shot_default.json"))
        .expect("bundled demonstrations parse")
}

const CAR_CONTEXT_INSTRUCTION: &str = "Rewrite the ambiguous query as a clear \
natural-language question, using the given document as context.";

const IN_CONTEXT_INSTRUCTION: &str = "You are a system that gives an expansion \
for queries, expanding abbreviations and acronyms when applicable. Some examples are";

/// A fully specified prompting style: the template variant, its few-shot
/// demonstrations and the system instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptStyle {
    pub kind: PromptKind,
    pub few_shot: Vec<FewShotExample>,
    pub system_instruction: String,
}

impl PromptStyle {
    /// Style with its default instruction and demonstrations.
    pub fn new(kind: PromptKind) -> Self {
        let (instruction, few_shot) = match kind {
            PromptKind::CarContext => (CAR_CONTEXT_INSTRUCTION, default_few_shot()),
            PromptKind::InContext => (IN_CONTEXT_INSTRUCTION, default_few_shot()),
            PromptKind::Prompt1 | PromptKind::Prompt2 | PromptKind::PseudoDocument => {
                ("", Vec::new())
            }
        };
        PromptStyle {
            kind,
            few_shot,
            system_instruction: instruction.to_string(),
        }
    }

    pub fn requires_context(&self) -> bool {
        self.kind == PromptKind::CarContext
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// OpenAI-style chat-completion request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub presence_penalty: f64,
    pub frequency_penalty: f64,
}

impl ChatRequest {
    /// Canonical text rendering of the message sequence: one
    /// `role: content` line per message. Mock fixtures key on the SHA-256
    /// of this string.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| format!("{}: {}", m.role.as_str(), m.content))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Hex SHA-256 of [`prompt_text`](Self::prompt_text).
    pub fn prompt_digest(&self) -> String {
        hex::encode(Sha256::digest(self.prompt_text().as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("request serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatUsage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
    pub total_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: String,
    pub usage: ChatUsage,
}

fn test_block(kind: PromptKind, query_text: &str, context: Option<&str>) -> String {
    match kind {
        PromptKind::Prompt1 => format!("Generate short sentence expanding: {query_text}"),
        PromptKind::Prompt2 => format!("Generate short sentence question: {query_text}"),
        PromptKind::InContext => format!("Query: {query_text}"),
        PromptKind::CarContext => format!(
            "Document: {}\nQuery: {query_text}",
            context.expect("checked by build_prompt")
        ),
        PromptKind::PseudoDocument => {
            format!("Write a passage that answers the given query: {query_text}")
        }
    }
}

fn demo_block(kind: PromptKind, demo_query: &str) -> String {
    match kind {
        PromptKind::Prompt1 => format!("Generate short sentence expanding: {demo_query}"),
        PromptKind::Prompt2 => format!("Generate short sentence question: {demo_query}"),
        PromptKind::PseudoDocument => {
            format!("Write a passage that answers the given query: {demo_query}")
        }
        PromptKind::InContext | PromptKind::CarContext => format!("Query: {demo_query}"),
    }
}

/// Build the full message sequence for one rewrite call: system
/// instruction, demonstrations in order (as user/assistant turns), then
/// the test query, with the context document appended for the
/// context-aware style.
pub fn build_prompt(
    style: &PromptStyle,
    params: &GenerationParams,
    query: &Query,
    context: Option<&str>,
) -> Result<ChatRequest, RewriteError> {
    params.validate()?;
    if style.requires_context() && context.is_none() {
        return Err(RewriteError::contract(format!(
            "style {} requires a context document",
            style.kind.as_str()
        )));
    }
    if !style.requires_context() && context.is_some() {
        return Err(RewriteError::contract(format!(
            "style {} takes no context document",
            style.kind.as_str()
        )));
    }
    if style.kind == PromptKind::InContext && style.few_shot.is_empty() {
        return Err(RewriteError::contract(
            "in_context style requires at least one demonstration",
        ));
    }

    let mut messages = Vec::with_capacity(2 * style.few_shot.len() + 2);
    if !style.system_instruction.is_empty() {
        messages.push(ChatMessage {
            role: Role::System,
            content: style.system_instruction.clone(),
        });
    }
    for demo in &style.few_shot {
        messages.push(ChatMessage {
            role: Role::User,
            content: demo_block(style.kind, &demo.query),
        });
        messages.push(ChatMessage {
            role: Role::Assistant,
            content: demo.description.clone(),
        });
    }
    messages.push(ChatMessage {
        role: Role::User,
        content: test_block(style.kind, &query.text, context),
    });

    Ok(ChatRequest {
        model: params.model_name.clone(),
        messages,
        temperature: params.temperature,
        max_tokens: params.max_tokens,
        presence_penalty: params.presence_penalty,
        frequency_penalty: params.frequency_penalty,
    })
}

/// Context budget when no passage selector narrows the document.
pub const CONTEXT_CHAR_BUDGET: usize = 3000;

/// Truncate an over-long context document at the last sentence boundary
/// before [`CONTEXT_CHAR_BUDGET`] characters.
pub fn truncate_context(text: &str) -> String {
    if text.len() <= CONTEXT_CHAR_BUDGET {
        return text.to_string();
    }
    let mut kept = String::new();
    for sentence in split_sentences(text) {
        let extra = if kept.is_empty() {
            sentence.len()
        } else {
            sentence.len() + 1
        };
        if kept.len() + extra > CONTEXT_CHAR_BUDGET {
            break;
        }
        if !kept.is_empty() {
            kept.push(' ');
        }
        kept.push_str(&sentence);
    }
    if kept.is_empty() {
        // No sentence boundary inside the budget; hard cut at a char edge.
        let mut end = CONTEXT_CHAR_BUDGET;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        kept = text[..end].to_string();
    }
    kept
}
