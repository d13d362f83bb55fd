//! Passage selection over segmented documents.

use std::path::Path;

use car_corpus::{segment_passages, Document, Passage, Query};
use car_grad::ParamMap64;

use crate::attention::AttentionSelector;
use crate::encoder::SelectorVocab;
use crate::error::SelectorError;
use crate::linear::LinearSelector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorKind {
    Linear,
    Attention,
}

impl SelectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectorKind::Linear => "linear",
            SelectorKind::Attention => "attention",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SelectorError> {
        match s {
            "linear" => Ok(SelectorKind::Linear),
            "attention" => Ok(SelectorKind::Attention),
            other => Err(SelectorError::contract(format!(
                "unknown selector kind '{other}'"
            ))),
        }
    }
}

/// Either selector behind one scoring interface.
#[derive(Debug, Clone)]
pub enum Selector {
    Linear(LinearSelector),
    Attention(AttentionSelector),
}

impl Selector {
    pub fn init(
        kind: SelectorKind,
        vocab: SelectorVocab,
        d_emb: usize,
        hidden: usize,
        seed: u64,
    ) -> Self {
        match kind {
            SelectorKind::Linear => Selector::Linear(LinearSelector::init(vocab, d_emb, seed)),
            SelectorKind::Attention => {
                Selector::Attention(AttentionSelector::init(vocab, d_emb, hidden, seed))
            }
        }
    }

    pub fn kind(&self) -> SelectorKind {
        match self {
            Selector::Linear(_) => SelectorKind::Linear,
            Selector::Attention(_) => SelectorKind::Attention,
        }
    }

    pub fn vocab(&self) -> &SelectorVocab {
        match self {
            Selector::Linear(s) => &s.vocab,
            Selector::Attention(s) => &s.vocab,
        }
    }

    pub fn params(&self) -> &ParamMap64 {
        match self {
            Selector::Linear(s) => &s.params,
            Selector::Attention(s) => &s.params,
        }
    }

    pub fn score(&self, query_text: &str, passage_text: &str) -> Result<f64, SelectorError> {
        match self {
            Selector::Linear(s) => s.score(query_text, passage_text),
            Selector::Attention(s) => s.score(query_text, passage_text),
        }
    }

    /// Persist as `params.json` + `vocab.txt` inside `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), SelectorError> {
        std::fs::create_dir_all(dir).map_err(|e| SelectorError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        self.params().save(&dir.join("params.json"))?;
        self.vocab().save(&dir.join("vocab.txt"))
    }

    /// Load a selector saved by [`save`](Self::save); sizes come from the
    /// stored tensor shapes.
    pub fn load(kind: SelectorKind, dir: &Path) -> Result<Self, SelectorError> {
        let params = ParamMap64::load(&dir.join("params.json"))?;
        let vocab = SelectorVocab::load(&dir.join("vocab.txt"))?;
        Ok(match kind {
            SelectorKind::Linear => Selector::Linear(LinearSelector { vocab, params }),
            SelectorKind::Attention => Selector::Attention(AttentionSelector { vocab, params }),
        })
    }
}

/// Highest-scoring passage of a document; bitwise ties break toward the
/// lowest passage index.
pub fn select_passage(
    selector: &Selector,
    query: &Query,
    doc: &Document,
) -> Result<(Passage, f64), SelectorError> {
    let passages = segment_passages(doc);
    let mut best: Option<(Passage, f64)> = None;
    for passage in passages {
        let score = selector.score(&query.text, &passage.text)?;
        match &best {
            Some((_, best_score)) if score <= *best_score => {}
            _ => best = Some((passage, score)),
        }
    }
    Ok(best.expect("segment_passages yields at least one passage"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_selector(texts: &[&str]) -> Selector {
        let vocab = SelectorVocab::build(texts.iter().copied());
        Selector::init(SelectorKind::Linear, vocab, 8, 4, 3)
    }

    #[test]
    fn single_passage_document_returns_index_zero() {
        let selector = linear_selector(&["one two three"]);
        let doc = Document::new("d", "One two. Three.");
        let (passage, _) = select_passage(&selector, &Query::new("q", "one"), &doc).unwrap();
        assert_eq!(passage.index, 0);
    }

    #[test]
    fn bitwise_equal_scores_pick_lowest_index() {
        // Two identical passages score identically; the first must win.
        let selector = linear_selector(&["same tokens here"]);
        let sentence = "Same tokens here.";
        let text = std::iter::repeat(sentence)
            .take(8)
            .collect::<Vec<_>>()
            .join(" ");
        let doc = Document::new("d", &text);
        let (passage, _) =
            select_passage(&selector, &Query::new("q", "same tokens"), &doc).unwrap();
        assert_eq!(passage.index, 0);
    }

    #[test]
    fn planted_overlap_passage_wins_with_one_hot_identity() {
        // One-hot embeddings and an identity feed-forward layer make the
        // score a pure token-overlap count; only one passage shares tokens
        // with the query.
        use crate::linear::{B_FF, EMBEDDING, W_FF};
        let corpus = [
            "planted marker sentence.",
            "other filler words.",
            "more unrelated text.",
        ];
        let vocab = SelectorVocab::build(corpus.iter().copied());
        let v = vocab.size();
        let mut linear = LinearSelector::init(vocab, v, 1);
        let mut one_hot = vec![0.0; v * v];
        for i in 0..v {
            one_hot[i * v + i] = 1.0;
        }
        linear
            .params
            .insert(EMBEDDING, car_grad::Tensor64::matrix(v, v, one_hot.clone()).unwrap());
        linear
            .params
            .insert(W_FF, car_grad::Tensor64::matrix(v, v, one_hot).unwrap());
        linear
            .params
            .insert(B_FF, car_grad::Tensor64::zeros(vec![v]));
        let selector = Selector::Linear(linear);

        let doc = Document::new(
            "d",
            "Other filler words. More unrelated text. Extra filler again. \
             Noise keeps going. Planted marker sentence.",
        );
        let query = Query::new("q", "planted marker");
        let (passage, score) = select_passage(&selector, &query, &doc).unwrap();
        assert!(passage.text.contains("Planted marker"));
        assert!(score > 0.0);
    }

    #[test]
    fn save_load_round_trip() {
        let selector = linear_selector(&["alpha beta gamma"]);
        let dir = tempfile::tempdir().unwrap();
        selector.save(dir.path()).unwrap();
        let loaded = Selector::load(SelectorKind::Linear, dir.path()).unwrap();
        assert_eq!(
            selector.score("alpha", "beta gamma").unwrap(),
            loaded.score("alpha", "beta gamma").unwrap()
        );
    }
}
