//! Ranker vocabulary and pair tokenization.
//!
//! Reserved indices: `[PAD]`=0, `[UNK]`=1, `[CLS]`=2, `[SEP]`=3. The rest
//! of the vocabulary is built from the training corpus by descending token
//! frequency, ties broken lexicographically, capped at a fixed size.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use car_corpus::tokenize;

use crate::error::RankerError;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const CLS: usize = 2;
pub const SEP: usize = 3;
pub const RESERVED: usize = 4;

pub const DEFAULT_VOCAB_CAP: usize = 8192;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Build from corpus texts: count token frequencies, order by
    /// (frequency desc, token asc), keep at most `cap - 4` tokens.
    pub fn build<'a>(texts: impl Iterator<Item = &'a str>, cap: usize) -> Self {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for text in texts {
            for token in tokenize(text) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let keep = cap.saturating_sub(RESERVED);
        let tokens: Vec<String> = ranked.into_iter().take(keep).map(|(t, _)| t).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + RESERVED))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Total size including the four reserved slots.
    pub fn size(&self) -> usize {
        self.tokens.len() + RESERVED
    }

    pub fn token_id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn text_ids(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.token_id(t)).collect()
    }

    /// Token-per-line file; indices implicit after the 4 reserved tokens.
    pub fn save(&self, path: &Path) -> Result<(), RankerError> {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| RankerError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, RankerError> {
        let content = fs::read_to_string(path).map_err(|e| RankerError::io(path, e))?;
        let tokens: Vec<String> = content.lines().map(str::to_string).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + RESERVED))
            .collect();
        Ok(Vocabulary { tokens, index })
    }
}

/// Padded id sequence with its attention mask. `ids[..real_len]` are the
/// meaningful positions; the rest is `[PAD]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPair {
    pub ids: Vec<usize>,
    pub mask: Vec<bool>,
    pub real_len: usize,
}

/// `[CLS] q [SEP] d [SEP]`, truncated to `max_len` by dropping document
/// tokens from the end (the final `[SEP]` is always kept), then padded to
/// `max_len`.
pub fn tokenize_pair(
    vocab: &Vocabulary,
    query_text: &str,
    doc_text: &str,
    max_len: usize,
) -> Result<TokenizedPair, RankerError> {
    if max_len < 4 {
        return Err(RankerError::contract("max_len must be at least 4"));
    }
    let query_ids = vocab.text_ids(query_text);
    if 3 + query_ids.len() > max_len {
        return Err(RankerError::contract(format!(
            "query of {} tokens does not fit max_len {max_len}; query tokens are never dropped",
            query_ids.len()
        )));
    }
    let mut doc_ids = vocab.text_ids(doc_text);
    let budget = max_len - 3 - query_ids.len();
    doc_ids.truncate(budget);

    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS);
    ids.extend_from_slice(&query_ids);
    ids.push(SEP);
    ids.extend_from_slice(&doc_ids);
    ids.push(SEP);
    let real_len = ids.len();
    ids.resize(max_len, PAD);
    let mask = (0..max_len).map(|i| i < real_len).collect();
    Ok(TokenizedPair {
        ids,
        mask,
        real_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(["a b c d e f g"].into_iter(), DEFAULT_VOCAB_CAP)
    }

    #[test]
    fn pair_layout_is_cls_q_sep_d_sep() {
        let v = vocab();
        let pair = tokenize_pair(&v, "a b", "c", 16).unwrap();
        let expected = vec![
            CLS,
            v.token_id("a"),
            v.token_id("b"),
            SEP,
            v.token_id("c"),
            SEP,
        ];
        assert_eq!(&pair.ids[..pair.real_len], expected.as_slice());
        assert_eq!(pair.real_len, 6);
        assert!(pair.ids[6..].iter().all(|&i| i == PAD));
        assert!(pair.mask[..6].iter().all(|&m| m));
        assert!(pair.mask[6..].iter().all(|&m| !m));
    }

    #[test]
    fn long_document_truncates_to_max_len_with_final_sep() {
        let v = vocab();
        let doc = vec!["a"; 600].join(" ");
        let pair = tokenize_pair(&v, "b c", "a", 512).map(|_| ()).unwrap();
        let _ = pair;
        let pair = tokenize_pair(&v, "b c", &doc, 512).unwrap();
        assert_eq!(pair.real_len, 512);
        assert_eq!(pair.ids[511], SEP);
        assert_eq!(pair.ids.len(), 512);
    }

    #[test]
    fn empty_document_keeps_double_sep() {
        let v = vocab();
        let pair = tokenize_pair(&v, "a b", "", 16).unwrap();
        let expected = vec![CLS, v.token_id("a"), v.token_id("b"), SEP, SEP];
        assert_eq!(&pair.ids[..pair.real_len], expected.as_slice());
    }

    #[test]
    fn frequency_then_lexicographic_order() {
        let v = Vocabulary::build(["b b b a a c", "a"].into_iter(), 100);
        // a: 3, b: 3, c: 1 -> ties on frequency break lexicographically.
        assert_eq!(v.token_id("a"), RESERVED);
        assert_eq!(v.token_id("b"), RESERVED + 1);
        assert_eq!(v.token_id("c"), RESERVED + 2);
    }

    #[test]
    fn cap_limits_vocabulary() {
        let v = Vocabulary::build(["a b c d e f"].into_iter(), 6);
        assert_eq!(v.size(), 6);
        assert_eq!(v.token_id("a"), RESERVED);
        assert_eq!(v.token_id("b"), RESERVED + 1);
        assert_eq!(v.token_id("f"), UNK);
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let v = vocab();
        assert_eq!(v.token_id("zzz"), UNK);
    }

    #[test]
    fn vocab_file_round_trip() {
        let v = vocab();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        v.save(&path).unwrap();
        assert_eq!(Vocabulary::load(&path).unwrap(), v);
    }
}
