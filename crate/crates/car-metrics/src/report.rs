//! Run evaluation: per-query RR and nDCG@k plus aggregate means, emitted as
//! both a human-readable table and machine-readable JSON.

use std::collections::BTreeMap;

use car_corpus::{validate_run, CorpusError, JudgmentSet, RunEntry};
use serde::{Deserialize, Serialize};

use crate::ranking::{ndcg_at_k, reciprocal_rank};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub rr: f64,
    pub ndcg: f64,
}

/// Evaluation result over one run file. Queries with no judged documents
/// are excluded from the means and listed separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub mean_rr: f64,
    pub mean_ndcg: f64,
    pub evaluated_queries: usize,
    pub excluded_queries: Vec<String>,
    pub ndcg_k: usize,
    /// RR cutoff; `None` means full run depth.
    pub mrr_cutoff: Option<usize>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, one row per query plus the aggregate row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>10} {:>12}\n",
            "query",
            "RR",
            format!("nDCG@{}", self.ndcg_k)
        ));
        for (query_id, m) in &self.per_query {
            out.push_str(&format!(
                "{:<24} {:>10.4} {:>12.4}\n",
                query_id, m.rr, m.ndcg
            ));
        }
        out.push_str(&format!(
            "{:<24} {:>10.4} {:>12.4}\n",
            format!("mean ({} queries)", self.evaluated_queries),
            self.mean_rr,
            self.mean_ndcg
        ));
        if !self.excluded_queries.is_empty() {
            out.push_str(&format!(
                "excluded ({} without judgments): {}\n",
                self.excluded_queries.len(),
                self.excluded_queries.join(" ")
            ));
        }
        out
    }
}

/// Evaluate a validated run against qrels at nDCG cutoff `k`.
pub fn evaluate_run(
    entries: &[RunEntry],
    qrels: &JudgmentSet,
    k: usize,
    mrr_cutoff: Option<usize>,
) -> Result<EvalReport, CorpusError> {
    validate_run(entries)?;
    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();

    let mut i = 0;
    while i < entries.len() {
        let query_id = entries[i].query_id.clone();
        let mut j = i;
        while j < entries.len() && entries[j].query_id == query_id {
            j += 1;
        }
        let run = &entries[i..j];
        if qrels.has_query(&query_id) {
            per_query.insert(
                query_id,
                QueryMetrics {
                    rr: reciprocal_rank(run, qrels, mrr_cutoff),
                    ndcg: ndcg_at_k(run, qrels, k),
                },
            );
        } else {
            excluded.push(query_id);
        }
        i = j;
    }

    let evaluated = per_query.len();
    let (mut mean_rr, mut mean_ndcg) = (0.0, 0.0);
    if evaluated > 0 {
        mean_rr = per_query.values().map(|m| m.rr).sum::<f64>() / evaluated as f64;
        mean_ndcg = per_query.values().map(|m| m.ndcg).sum::<f64>() / evaluated as f64;
    }
    excluded.sort();
    Ok(EvalReport {
        per_query,
        mean_rr,
        mean_ndcg,
        evaluated_queries: evaluated,
        excluded_queries: excluded,
        ndcg_k: k,
        mrr_cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use car_corpus::Judgment;

    fn entry(qid: &str, did: &str, rank: u32, score: f64) -> RunEntry {
        RunEntry {
            query_id: qid.into(),
            doc_id: did.into(),
            rank,
            score,
            tag: "t".into(),
        }
    }

    fn qrels(graded: &[(&str, &str, u32)]) -> JudgmentSet {
        let mut set = JudgmentSet::new();
        for (q, d, g) in graded {
            set.insert(Judgment {
                query_id: (*q).into(),
                doc_id: (*d).into(),
                grade: *g,
            })
            .unwrap();
        }
        set
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let run = vec![entry("q1", "d1", 1, 0.9), entry("q1", "d2", 2, 0.1)];
        let qrels = qrels(&[("q1", "d1", 1), ("q1", "d2", 0)]);
        let report = evaluate_run(&run, &qrels, 10, None).unwrap();
        assert_eq!(report.mean_rr, 1.0);
        assert_eq!(report.mean_ndcg, 1.0);
        assert_eq!(report.evaluated_queries, 1);
    }

    #[test]
    fn mean_is_arithmetic_over_queries() {
        let run = vec![
            entry("q1", "d1", 1, 0.9),
            entry("q2", "d2", 1, 0.9),
            entry("q2", "d3", 2, 0.5),
        ];
        let qrels = qrels(&[("q1", "d1", 1), ("q2", "d3", 1)]);
        let report = evaluate_run(&run, &qrels, 10, None).unwrap();
        assert_eq!(report.mean_rr, 0.75);
    }

    #[test]
    fn unjudged_query_is_excluded_and_counted() {
        let run = vec![entry("q1", "d1", 1, 0.9), entry("nope", "d2", 1, 0.9)];
        let qrels = qrels(&[("q1", "d1", 1)]);
        let report = evaluate_run(&run, &qrels, 10, None).unwrap();
        assert_eq!(report.evaluated_queries, 1);
        assert_eq!(report.excluded_queries, vec!["nope".to_string()]);
        assert!(report.render_table().contains("excluded (1"));
    }

    #[test]
    fn report_json_round_trips() {
        let run = vec![entry("q1", "d1", 1, 0.9)];
        let qrels = qrels(&[("q1", "d1", 1)]);
        let report = evaluate_run(&run, &qrels, 10, Some(100)).unwrap();
        let back: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }
}
