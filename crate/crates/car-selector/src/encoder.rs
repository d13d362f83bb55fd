//! Token vocabulary for the selectors. Index 0 is reserved for unknown
//! tokens; known tokens are indexed deterministically (sorted order).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use car_corpus::tokenize;

use crate::error::SelectorError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorVocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl SelectorVocab {
    /// Deterministic vocabulary: unique tokens of all texts, sorted,
    /// starting at index 1 (0 is the unknown slot).
    pub fn build<'a>(texts: impl Iterator<Item = &'a str>) -> Self {
        let mut unique: Vec<String> = texts.flat_map(|t| tokenize(t)).collect();
        unique.sort();
        unique.dedup();
        let index = unique
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 1))
            .collect();
        SelectorVocab {
            tokens: unique,
            index,
        }
    }

    /// Embedding-table row count (unknown slot included).
    pub fn size(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn token_id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    /// Token ids of a text under the shared tokenizer; unknown tokens map
    /// to index 0.
    pub fn token_ids(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.token_id(t)).collect()
    }

    /// One token per line, indices implicit from 1.
    pub fn save(&self, path: &Path) -> Result<(), SelectorError> {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| SelectorError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SelectorError> {
        let content = fs::read_to_string(path).map_err(|e| SelectorError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let tokens: Vec<String> = content.lines().map(str::to_string).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 1))
            .collect();
        Ok(SelectorVocab { tokens, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_tokens_map_to_zero() {
        let vocab = SelectorVocab::build(["alpha beta"].into_iter());
        assert_eq!(vocab.token_ids("beta gamma"), vec![vocab.token_id("beta"), 0]);
    }

    #[test]
    fn construction_is_order_independent() {
        let a = SelectorVocab::build(["b a", "c"].into_iter());
        let b = SelectorVocab::build(["c", "a b"].into_iter());
        assert_eq!(a, b);
    }
}
