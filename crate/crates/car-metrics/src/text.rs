//! Text-generation metrics: ROUGE-L (LCS F1) and the embedding score
//! (greedy token matching with pluggable embeddings).

use car_corpus::tokenize;
use serde::{Deserialize, Serialize};

/// Precision / recall / F1 triple for text comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TextScore {
    pub fn zero() -> Self {
        TextScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        }
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        TextScore {
            precision,
            recall,
            f1,
        }
    }
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    // Rolling single-row dynamic program over the standard LCS recurrence.
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            current[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// ROUGE-L over the shared tokenizer's token sequences, reported as F1.
pub fn rouge_l(candidate: &str, reference: &str) -> TextScore {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return TextScore::zero();
    }
    let lcs = lcs_length(&cand, &refr) as f64;
    TextScore::from_pr(lcs / cand.len() as f64, lcs / refr.len() as f64)
}

/// Maps a token sequence to one vector per token. Vectors must share a
/// dimension across calls so cosine similarities are meaningful.
pub trait TokenEmbedder {
    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>>;
}

/// Exact-match embedder: one-hot vectors over a fixed vocabulary built up
/// front; unknown tokens map to the zero vector.
pub struct OneHotEmbedder {
    vocab: std::collections::BTreeMap<String, usize>,
}

impl OneHotEmbedder {
    pub fn from_texts<'a>(texts: impl Iterator<Item = &'a str>) -> Self {
        let mut vocab = std::collections::BTreeMap::new();
        for text in texts {
            for token in tokenize(text) {
                let next = vocab.len();
                vocab.entry(token).or_insert(next);
            }
        }
        OneHotEmbedder { vocab }
    }
}

impl TokenEmbedder for OneHotEmbedder {
    fn embed(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        let dim = self.vocab.len().max(1);
        tokens
            .iter()
            .map(|t| {
                let mut v = vec![0.0; dim];
                if let Some(&i) = self.vocab.get(t) {
                    v[i] = 1.0;
                }
                v
            })
            .collect()
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (na * nb)
}

/// Greedy word-level matching with token embeddings: precision is the mean
/// over candidate tokens of the best cosine to any reference token, recall
/// the symmetric quantity.
pub fn embed_score(
    candidate: &str,
    reference: &str,
    embedder: &dyn TokenEmbedder,
) -> TextScore {
    let cand_tokens = tokenize(candidate);
    let ref_tokens = tokenize(reference);
    if cand_tokens.is_empty() || ref_tokens.is_empty() {
        return TextScore::zero();
    }
    let cand_vecs = embedder.embed(&cand_tokens);
    let ref_vecs = embedder.embed(&ref_tokens);

    let best_against = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        let total: f64 = from
            .iter()
            .map(|v| {
                to.iter()
                    .map(|w| cosine(v, w))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum();
        total / from.len() as f64
    };

    TextScore::from_pr(
        best_against(&cand_vecs, &ref_vecs),
        best_against(&ref_vecs, &cand_vecs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_strings_score_one() {
        let s = rouge_l("the cat sat", "the cat sat");
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_partial_overlap() {
        // LCS = 3, P = 3/3, R = 3/4, F1 = 0.857143.
        let s = rouge_l("the cat sat", "the cat was sat");
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.75);
        assert!((s.f1 - 0.857143).abs() < 1e-6);
    }

    #[test]
    fn rouge_disjoint_tokens_zero() {
        let s = rouge_l("alpha beta", "gamma delta");
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn rouge_empty_sides_zero() {
        assert_eq!(rouge_l("", "the cat").f1, 0.0);
        assert_eq!(rouge_l("the cat", "").f1, 0.0);
    }

    #[test]
    fn embed_score_identical_is_one() {
        let embedder = OneHotEmbedder::from_texts(["a b c"].into_iter());
        let s = embed_score("a b c", "a b c", &embedder);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn embed_score_half_overlap() {
        let embedder = OneHotEmbedder::from_texts(["a b", "a c"].into_iter());
        let s = embed_score("a b", "a c", &embedder);
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn embed_score_disjoint_zero() {
        let embedder = OneHotEmbedder::from_texts(["a b", "c d"].into_iter());
        let s = embed_score("a b", "c d", &embedder);
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn scores_symmetric_under_swap() {
        let embedder = OneHotEmbedder::from_texts(["x y z", "x q"].into_iter());
        let a = embed_score("x y z", "x q", &embedder);
        let b = embed_score("x q", "x y z", &embedder);
        assert_eq!(a.precision, b.recall);
        assert_eq!(a.recall, b.precision);
        let ra = rouge_l("x y z", "x q");
        let rb = rouge_l("x q", "x y z");
        assert_eq!(ra.precision, rb.recall);
        assert_eq!(ra.recall, rb.precision);
    }
}
