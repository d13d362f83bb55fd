//! Deterministic mock clients. All pipeline tests run against these; the
//! HTTP client is interchangeable behind the same trait.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};

use car_corpus::tokenize;

use crate::client::ChatClient;
use crate::error::RewriteError;
use crate::prompt::{ChatRequest, ChatResponse, ChatUsage};

fn token_limited(text: &str, max_tokens: u32) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    words
        .into_iter()
        .take(max_tokens as usize)
        .collect::<Vec<_>>()
        .join(" ")
}

fn respond(text: String) -> ChatResponse {
    let completion_tokens = text.split_whitespace().count() as u32;
    ChatResponse {
        text,
        finish_reason: "stop".into(),
        usage: ChatUsage {
            prompt_tokens: 0,
            completion_tokens,
            total_tokens: completion_tokens,
        },
    }
}

/// Fixture-backed mock: a JSON map from the SHA-256 of the fully built
/// prompt text to the canned response. Unknown prompts are an API error.
pub struct MockFixtureClient {
    fixtures: BTreeMap<String, String>,
}

impl MockFixtureClient {
    pub fn new(fixtures: BTreeMap<String, String>) -> Self {
        MockFixtureClient { fixtures }
    }

    /// Convenience: key fixtures by the requests that will produce them.
    pub fn from_requests(pairs: impl IntoIterator<Item = (ChatRequest, String)>) -> Self {
        let fixtures = pairs
            .into_iter()
            .map(|(request, response)| (request.prompt_digest(), response))
            .collect();
        MockFixtureClient { fixtures }
    }

    pub fn load(path: &Path) -> Result<Self, RewriteError> {
        let content = std::fs::read_to_string(path).map_err(|e| RewriteError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let fixtures: BTreeMap<String, String> =
            serde_json::from_str(&content).map_err(|e| RewriteError::contract(e.to_string()))?;
        Ok(MockFixtureClient { fixtures })
    }

    pub fn save(&self, path: &Path) -> Result<(), RewriteError> {
        let text = serde_json::to_string_pretty(&self.fixtures)
            .map_err(|e| RewriteError::contract(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| RewriteError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

impl ChatClient for MockFixtureClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, RewriteError> {
        match self.fixtures.get(&request.prompt_digest()) {
            Some(text) => Ok(respond(token_limited(text, request.max_tokens))),
            None => Err(RewriteError::Api {
                status: 404,
                detail: format!("no fixture for prompt digest {}", request.prompt_digest()),
            }),
        }
    }
}

/// Behavioral mock: expands the query with the most salient tokens of the
/// prompt's context document. Salience is plain frequency (ties broken by
/// first occurrence), excluding tokens already in the query. Without a
/// context block it echoes a question form of the query.
pub struct ContextEchoClient {
    pub expansion_tokens: usize,
}

impl Default for ContextEchoClient {
    fn default() -> Self {
        ContextEchoClient {
            expansion_tokens: 6,
        }
    }
}

impl ContextEchoClient {
    fn parse_last_user(content: &str) -> (Option<&str>, &str) {
        // car_context test blocks look like "Document: ...\nQuery: ...".
        if let Some(rest) = content.strip_prefix("Document: ") {
            if let Some((doc, query_line)) = rest.rsplit_once("\nQuery: ") {
                return (Some(doc), query_line);
            }
        }
        let query = content.rsplit_once(": ").map(|(_, q)| q).unwrap_or(content);
        (None, query)
    }

    fn salient_tokens(&self, context: &str, query_tokens: &[String]) -> Vec<String> {
        let mut counts: Vec<(String, usize, usize)> = Vec::new();
        for token in tokenize(context) {
            if query_tokens.contains(&token) {
                continue;
            }
            match counts.iter_mut().find(|(t, _, _)| *t == token) {
                Some((_, count, _)) => *count += 1,
                None => counts.push((token, 1, counts.len())),
            }
        }
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        counts
            .into_iter()
            .take(self.expansion_tokens)
            .map(|(t, _, _)| t)
            .collect()
    }
}

impl ChatClient for ContextEchoClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, RewriteError> {
        let last_user = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == crate::prompt::Role::User)
            .ok_or_else(|| RewriteError::contract("request has no user message"))?;
        let (context, query_text) = Self::parse_last_user(&last_user.content);
        let query_tokens = tokenize(query_text);
        let text = match context {
            Some(doc) => {
                let expansion = self.salient_tokens(doc, &query_tokens);
                if expansion.is_empty() {
                    format!("what is {query_text}")
                } else {
                    format!("{query_text} {}", expansion.join(" "))
                }
            }
            None => format!("what is {query_text}"),
        };
        Ok(respond(token_limited(&text, request.max_tokens)))
    }
}

/// Test client failing with a transient error a fixed number of times
/// (`u32::MAX` for always) before succeeding.
pub struct FlakyClient {
    failures: u32,
    seen: AtomicU32,
    response: String,
}

impl FlakyClient {
    pub fn new(failures: u32, response: impl Into<String>) -> Self {
        FlakyClient {
            failures,
            seen: AtomicU32::new(0),
            response: response.into(),
        }
    }

    pub fn always_failing() -> Self {
        Self::new(u32::MAX, "")
    }

    pub fn attempts(&self) -> u32 {
        self.seen.load(Ordering::SeqCst)
    }
}

impl ChatClient for FlakyClient {
    fn complete(&self, _request: &ChatRequest) -> Result<ChatResponse, RewriteError> {
        let attempt = self.seen.fetch_add(1, Ordering::SeqCst);
        if attempt < self.failures {
            Err(RewriteError::Transport("status 500".into()))
        } else {
            Ok(respond(self.response.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{build_prompt, GenerationParams, PromptKind, PromptStyle};
    use car_corpus::Query;

    #[test]
    fn fixture_lookup_returns_exact_string() {
        let style = PromptStyle::new(PromptKind::CarContext);
        let params = GenerationParams::defaults_for(PromptKind::CarContext, "mock");
        let query = Query::new("q1", "define sri");
        let doc = "Sri is a Sanskrit word used as a title of veneration.";
        let request = build_prompt(&style, &params, &query, Some(doc)).unwrap();
        let client = MockFixtureClient::from_requests([(
            request.clone(),
            "What is the meaning of the Sanskrit word Sri?".to_string(),
        )]);
        let response = client.complete(&request).unwrap();
        assert_eq!(response.text, "What is the meaning of the Sanskrit word Sri?");
        // Determinism: same request, same output.
        assert_eq!(client.complete(&request).unwrap(), response);
    }

    #[test]
    fn fixture_miss_is_api_error() {
        let client = MockFixtureClient::new(BTreeMap::new());
        let style = PromptStyle::new(PromptKind::Prompt1);
        let params = GenerationParams::defaults_for(PromptKind::Prompt1, "mock");
        let request = build_prompt(&style, &params, &Query::new("q", "x"), None).unwrap();
        assert!(matches!(
            client.complete(&request),
            Err(RewriteError::Api { status: 404, .. })
        ));
    }

    #[test]
    fn context_echo_expands_with_salient_tokens() {
        let style = PromptStyle::new(PromptKind::CarContext);
        let params = GenerationParams::defaults_for(PromptKind::CarContext, "mock");
        let query = Query::new("q1", "hs worms");
        let doc = "Hochschule Worms is a university. The university Hochschule \
                   offers programs. University programs in Worms.";
        let request = build_prompt(&style, &params, &query, Some(doc)).unwrap();
        let client = ContextEchoClient::default();
        let response = client.complete(&request).unwrap();
        assert!(response.text.starts_with("hs worms"));
        assert!(response.text.contains("university"));
        assert!(response.text.contains("hochschule"));
        // Deterministic.
        assert_eq!(client.complete(&request).unwrap(), response);
    }

    #[test]
    fn responses_respect_max_tokens() {
        let style = PromptStyle::new(PromptKind::CarContext);
        let mut params = GenerationParams::defaults_for(PromptKind::CarContext, "mock");
        params.max_tokens = 3;
        let doc = "alpha beta gamma delta epsilon zeta eta theta iota kappa";
        let request =
            build_prompt(&style, &params, &Query::new("q", "seed"), Some(doc)).unwrap();
        let response = ContextEchoClient::default().complete(&request).unwrap();
        assert!(response.text.split_whitespace().count() <= 3);
        assert!(response.usage.completion_tokens <= 3);
    }
}
