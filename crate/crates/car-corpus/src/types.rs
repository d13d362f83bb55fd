//! Core value types shared across the pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

/// A search query with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// A document (or passage-collection entry) with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// A window of consecutive sentences within one document.
/// `sentence_span` is half-open: sentences `[start, end)` of the document's
/// sentence sequence; `text` joins them with single spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub doc_id: String,
    pub index: usize,
    pub sentence_span: (usize, usize),
    pub text: String,
}

/// A graded relevance judgment for one (query, document) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub query_id: String,
    pub doc_id: String,
    pub grade: u32,
}

/// Relevance judgments indexed by query. Insertion rejects duplicate
/// (query, document) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentSet {
    by_query: BTreeMap<String, BTreeMap<String, u32>>,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, judgment: Judgment) -> Result<(), CorpusError> {
        let per_query = self.by_query.entry(judgment.query_id.clone()).or_default();
        if per_query.contains_key(&judgment.doc_id) {
            return Err(CorpusError::validation(format!(
                "duplicate judgment for ({}, {})",
                judgment.query_id, judgment.doc_id
            )));
        }
        per_query.insert(judgment.doc_id, judgment.grade);
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.by_query.get(query_id).and_then(|m| m.get(doc_id)).copied()
    }

    /// Documents judged with grade > 0 for the query, in doc-id order.
    pub fn relevant_docs(&self, query_id: &str) -> Vec<&str> {
        self.by_query
            .get(query_id)
            .map(|m| {
                m.iter()
                    .filter(|(_, g)| **g > 0)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// All grades for one query, in doc-id order.
    pub fn grades_for(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.by_query.get(query_id)
    }

    pub fn has_query(&self, query_id: &str) -> bool {
        self.by_query.contains_key(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &String> {
        self.by_query.keys()
    }

    /// Total number of (query, document) pairs.
    pub fn len(&self) -> usize {
        self.by_query.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    /// Flatten back to judgments in (query, doc) order.
    pub fn iter(&self) -> impl Iterator<Item = Judgment> + '_ {
        self.by_query.iter().flat_map(|(q, m)| {
            m.iter().map(move |(d, g)| Judgment {
                query_id: q.clone(),
                doc_id: d.clone(),
                grade: *g,
            })
        })
    }
}

/// A labeled (query, document) pair for ranker training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub query: Query,
    pub doc: Document,
    pub label: u8,
}

impl TrainingExample {
    pub fn new(query: Query, doc: Document, label: u8) -> Result<Self, CorpusError> {
        if label > 1 {
            return Err(CorpusError::validation(format!(
                "label must be 0 or 1, got {label}"
            )));
        }
        Ok(TrainingExample { query, doc, label })
    }
}

/// A training pair after query rewriting. `context_doc_id` names the
/// positive document used as prompt context for context-aware styles;
/// `fallback` marks rewrites that fell back to the original query text
/// after the rewrite call failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewrittenExample {
    pub original_query: Query,
    pub rewritten_text: String,
    pub context_doc_id: String,
    pub label: u8,
    pub prompt_style: String,
    pub rewriter_model: String,
    #[serde(default)]
    pub fallback: bool,
}

impl RewrittenExample {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.rewritten_text.is_empty() {
            return Err(CorpusError::validation("empty rewritten_text"));
        }
        if self.label > 1 {
            return Err(CorpusError::validation(format!(
                "label must be 0 or 1, got {}",
                self.label
            )));
        }
        Ok(())
    }
}

/// One line of a ranked retrieval run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub tag: String,
}
