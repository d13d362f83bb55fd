//! Sentence splitting and fixed-width passage segmentation.
//!
//! The sentence rule is deliberately simple and deterministic: a sentence
//! ends at '.', '!' or '?' when followed by whitespace or end-of-text.
//! Abbreviation handling is out of scope.

use crate::types::{Document, Passage};

/// Sentences per passage window.
pub const SENTENCES_PER_PASSAGE: usize = 4;

/// Split text into trimmed sentences, terminators kept.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_end = chars.peek().is_none();
            let before_space = chars
                .peek()
                .map(|(_, next)| next.is_whitespace())
                .unwrap_or(false);
            if at_end || before_space {
                let end = i + c.len_utf8();
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    sentences.push(sentence.to_string());
                }
                start = end;
            }
        }
    }
    if start < bytes.len() {
        let tail = text[start..].trim();
        if !tail.is_empty() {
            sentences.push(tail.to_string());
        }
    }
    sentences
}

/// Partition a document into passages of at most
/// [`SENTENCES_PER_PASSAGE`] consecutive sentences. Only the final passage
/// may be shorter. An empty document yields one empty passage.
pub fn segment_passages(doc: &Document) -> Vec<Passage> {
    let sentences = split_sentences(&doc.text);
    if sentences.is_empty() {
        return vec![Passage {
            doc_id: doc.id.clone(),
            index: 0,
            sentence_span: (0, 0),
            text: String::new(),
        }];
    }
    sentences
        .chunks(SENTENCES_PER_PASSAGE)
        .enumerate()
        .map(|(index, chunk)| {
            let start = index * SENTENCES_PER_PASSAGE;
            Passage {
                doc_id: doc.id.clone(),
                index,
                sentence_span: (start, start + chunk.len()),
                text: chunk.join(" "),
            }
        })
        .collect()
}
