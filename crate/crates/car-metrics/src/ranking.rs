//! Ranking metrics over TREC runs and qrels: reciprocal rank and nDCG@k
//! with the `2^grade - 1` gain and `log2(rank + 1)` discount.

use car_corpus::{JudgmentSet, RunEntry};

/// Reciprocal rank of the first relevant (grade > 0) document within
/// `cutoff` (`None` = full run depth). 0 when none is relevant.
pub fn reciprocal_rank(
    run: &[RunEntry],
    qrels: &JudgmentSet,
    cutoff: Option<usize>,
) -> f64 {
    let depth = cutoff.unwrap_or(run.len());
    for entry in run.iter().take(depth) {
        if qrels.grade(&entry.query_id, &entry.doc_id).unwrap_or(0) > 0 {
            return 1.0 / entry.rank as f64;
        }
    }
    0.0
}

fn gain(grade: u32) -> f64 {
    (2f64).powi(grade as i32) - 1.0
}

fn discount(position: usize) -> f64 {
    ((position + 1) as f64).log2()
}

/// Normalized discounted cumulative gain at cutoff `k` for one query's run.
/// The ideal ranking is the query's judged grades sorted descending.
/// Returns 0 when the ideal DCG is 0.
pub fn ndcg_at_k(run: &[RunEntry], qrels: &JudgmentSet, k: usize) -> f64 {
    if run.is_empty() || k == 0 {
        return 0.0;
    }
    let query_id = &run[0].query_id;
    let mut dcg = 0.0;
    for (i, entry) in run.iter().take(k).enumerate() {
        let grade = qrels.grade(query_id, &entry.doc_id).unwrap_or(0);
        dcg += gain(grade) / discount(i + 1);
    }
    let mut grades: Vec<u32> = qrels
        .grades_for(query_id)
        .map(|m| m.values().copied().collect())
        .unwrap_or_default();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    let mut idcg = 0.0;
    for (i, grade) in grades.iter().take(k).enumerate() {
        idcg += gain(*grade) / discount(i + 1);
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}
