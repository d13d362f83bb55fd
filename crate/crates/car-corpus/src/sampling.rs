//! Negative sampling from a candidate pool, excluding judged-relevant
//! documents.

use std::collections::BTreeMap;

use rand::seq::index;

use crate::error::CorpusError;
use crate::types::{Document, JudgmentSet, Query, TrainingExample};

/// Result of negative sampling; `shortfall` flags fewer-than-requested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSample {
    pub doc_ids: Vec<String>,
    pub shortfall: bool,
}

/// Draw up to `n` distinct negative document ids for `query_id`, uniformly
/// from `candidates` minus documents judged relevant (grade > 0).
/// Deterministic for a given seed; candidate order does not matter.
pub fn sample_negative_ids(
    query_id: &str,
    qrels: &JudgmentSet,
    candidates: &[String],
    n: usize,
    seed: u64,
) -> NegativeSample {
    let mut eligible: Vec<&String> = candidates
        .iter()
        .filter(|d| qrels.grade(query_id, d).unwrap_or(0) == 0)
        .collect();
    eligible.sort();
    eligible.dedup();

    if eligible.len() <= n {
        let shortfall = eligible.len() < n;
        return NegativeSample {
            doc_ids: eligible.into_iter().cloned().collect(),
            shortfall,
        };
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), n).into_iter().collect();
    chosen.sort_unstable();
    NegativeSample {
        doc_ids: chosen.into_iter().map(|i| eligible[i].clone()).collect(),
        shortfall: false,
    }
}

/// [`sample_negative_ids`] materialized into label-0 training examples.
/// Candidate ids absent from the collection are an error.
pub fn sample_negatives(
    query: &Query,
    qrels: &JudgmentSet,
    candidates: &[String],
    n: usize,
    seed: u64,
    collection: &BTreeMap<String, Document>,
) -> Result<(Vec<TrainingExample>, bool), CorpusError> {
    let sample = sample_negative_ids(&query.id, qrels, candidates, n, seed);
    let mut out = Vec::with_capacity(sample.doc_ids.len());
    for doc_id in &sample.doc_ids {
        let doc = collection.get(doc_id).ok_or_else(|| {
            CorpusError::validation(format!("candidate '{doc_id}' not in collection"))
        })?;
        out.push(TrainingExample::new(query.clone(), doc.clone(), 0)?);
    }
    Ok((out, sample.shortfall))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Judgment;

    fn qrels_with(query_id: &str, relevant: &[&str]) -> JudgmentSet {
        let mut set = JudgmentSet::new();
        for d in relevant {
            set.insert(Judgment {
                query_id: query_id.into(),
                doc_id: (*d).into(),
                grade: 1,
            })
            .unwrap();
        }
        set
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn negatives_exclude_relevant() {
        let qrels = qrels_with("q1", &["d1"]);
        let sample = sample_negative_ids("q1", &qrels, &ids(&["d1", "d2", "d3"]), 2, 9);
        assert_eq!(sample.doc_ids.len(), 2);
        assert!(!sample.doc_ids.contains(&"d1".to_string()));
        assert!(!sample.shortfall);
    }

    #[test]
    fn same_seed_same_sample() {
        let qrels = qrels_with("q1", &["d1"]);
        let candidates = ids(&["d1", "d2", "d3", "d4", "d5", "d6"]);
        let a = sample_negative_ids("q1", &qrels, &candidates, 3, 42);
        let b = sample_negative_ids("q1", &qrels, &candidates, 3, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn shortfall_returns_fewer_with_warning() {
        let qrels = qrels_with("q1", &["d1"]);
        let sample = sample_negative_ids("q1", &qrels, &ids(&["d1", "d2", "d3"]), 5, 1);
        assert_eq!(sample.doc_ids.len(), 2);
        assert!(sample.shortfall);
    }

    #[test]
    fn grade_zero_judgments_stay_eligible() {
        let mut qrels = qrels_with("q1", &["d1"]);
        qrels
            .insert(Judgment {
                query_id: "q1".into(),
                doc_id: "d2".into(),
                grade: 0,
            })
            .unwrap();
        let sample = sample_negative_ids("q1", &qrels, &ids(&["d1", "d2", "d3"]), 2, 3);
        assert!(sample.doc_ids.contains(&"d2".to_string()));
    }

    #[test]
    fn materialized_negatives_carry_label_zero() {
        let qrels = qrels_with("q1", &["d1"]);
        let mut collection = BTreeMap::new();
        for d in ["d1", "d2", "d3"] {
            collection.insert(d.to_string(), Document::new(d, "text"));
        }
        let (examples, shortfall) = sample_negatives(
            &Query::new("q1", "query"),
            &qrels,
            &ids(&["d1", "d2", "d3"]),
            2,
            5,
            &collection,
        )
        .unwrap();
        assert_eq!(examples.len(), 2);
        assert!(examples.iter().all(|e| e.label == 0));
        assert!(!shortfall);
    }
}
