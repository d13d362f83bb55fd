//! Candidate re-ranking at inference. The raw query text is used verbatim;
//! no rewriter is anywhere in this path.

use car_corpus::{Document, Query, RunEntry};

use crate::error::RankerError;
use crate::model::Ranker;

/// Score candidates and return the top `min(k, n)` as run entries with
/// ranks 1..; ties order by ascending document id.
pub fn rerank(
    ranker: &Ranker,
    query: &Query,
    candidates: &[Document],
    k: usize,
    tag: &str,
) -> Result<Vec<RunEntry>, RankerError> {
    if candidates.is_empty() {
        return Err(RankerError::contract(format!(
            "no candidates for query '{}'",
            query.id
        )));
    }
    let mut scored: Vec<(f64, &Document)> = Vec::with_capacity(candidates.len());
    for doc in candidates {
        scored.push((ranker.score(&query.text, &doc.text)?, doc));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (score, doc))| RunEntry {
            query_id: query.id.clone(),
            doc_id: doc.id.clone(),
            rank: (i + 1) as u32,
            score,
            tag: tag.to_string(),
        })
        .collect())
}
