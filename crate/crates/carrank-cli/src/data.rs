//! Workspace loading and training-pair assembly shared by the commands.

use std::collections::BTreeMap;

use car_corpus::{
    load_collection, load_qrels, load_queries, read_run, sample_negative_ids, tokenize, Document,
    JudgmentSet, Query, RewrittenExample, RunEntry, TrainingExample,
};
use car_ranker::TrainPair;

use crate::config::{query_seed, PipelineConfig};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Workspace {
    pub collection: BTreeMap<String, Document>,
    pub train_queries: BTreeMap<String, Query>,
    pub train_qrels: JudgmentSet,
    /// Candidate doc ids per train query, in first-stage order.
    pub train_candidates: BTreeMap<String, Vec<String>>,
    pub eval_queries: BTreeMap<String, Query>,
    pub eval_qrels: JudgmentSet,
    pub eval_candidates: BTreeMap<String, Vec<String>>,
}

fn candidates_by_query(entries: &[RunEntry]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for entry in entries {
        out.entry(entry.query_id.clone())
            .or_default()
            .push(entry.doc_id.clone());
    }
    out
}

pub fn load_workspace(config: &PipelineConfig) -> Result<Workspace, CliError> {
    config.validate_paths()?;
    let p = &config.paths;
    Ok(Workspace {
        collection: load_collection(&p.collection)?,
        train_queries: load_queries(&p.train_queries)?,
        train_qrels: load_qrels(&p.train_qrels)?,
        train_candidates: candidates_by_query(&read_run(&p.train_candidates)?),
        eval_queries: load_queries(&p.eval_queries)?,
        eval_qrels: load_qrels(&p.eval_qrels)?,
        eval_candidates: candidates_by_query(&read_run(&p.eval_candidates)?),
    })
}

/// The ambiguity predicate: a plain token-count threshold. Richer
/// heuristics (acronym or entity detection) can replace this in one place.
pub fn is_ambiguous(query: &Query, max_tokens: usize) -> bool {
    tokenize(&query.text).len() <= max_tokens
}

/// Ambiguous training queries in id order.
pub fn ambiguous_train_queries(ws: &Workspace, config: &PipelineConfig) -> Vec<Query> {
    ws.train_queries
        .values()
        .filter(|q| is_ambiguous(q, config.ambiguity_max_tokens))
        .cloned()
        .collect()
}

/// One positive example per (query, judged-relevant document) pair, in
/// (query id, doc id) order. Judged docs missing from the collection are an
/// error.
pub fn positive_examples(
    ws: &Workspace,
    queries: &[Query],
) -> Result<Vec<TrainingExample>, CliError> {
    let mut out = Vec::new();
    for query in queries {
        for doc_id in ws.train_qrels.relevant_docs(&query.id) {
            let doc = ws.collection.get(doc_id).ok_or_else(|| {
                CliError::data(format!("judged document '{doc_id}' not in collection"))
            })?;
            out.push(TrainingExample::new(query.clone(), doc.clone(), 1)?);
        }
    }
    Ok(out)
}

/// Seeded negative documents for one query, drawn from its candidate pool.
pub fn negative_docs(
    ws: &Workspace,
    config: &PipelineConfig,
    query: &Query,
    count: usize,
) -> Result<Vec<Document>, CliError> {
    let pool = ws.train_candidates.get(&query.id).ok_or_else(|| {
        CliError::data(format!("query '{}' missing from candidate run", query.id))
    })?;
    let sample = sample_negative_ids(
        &query.id,
        &ws.train_qrels,
        pool,
        count,
        query_seed(config.seed, &query.id),
    );
    sample
        .doc_ids
        .iter()
        .map(|doc_id| {
            ws.collection.get(doc_id).cloned().ok_or_else(|| {
                CliError::data(format!("candidate '{doc_id}' not in collection"))
            })
        })
        .collect()
}

/// Training pairs for the original-query arm: every positive plus
/// `negatives_per_positive` sampled negatives per positive, query text
/// taken verbatim.
pub fn original_pairs(ws: &Workspace, config: &PipelineConfig) -> Result<Vec<TrainPair>, CliError> {
    let queries = ambiguous_train_queries(ws, config);
    let mut pairs = Vec::new();
    for query in &queries {
        let positives: Vec<&str> = ws.train_qrels.relevant_docs(&query.id);
        if positives.is_empty() {
            continue;
        }
        for doc_id in &positives {
            let doc = ws.collection.get(*doc_id).ok_or_else(|| {
                CliError::data(format!("judged document '{doc_id}' not in collection"))
            })?;
            pairs.push(TrainPair {
                query_text: query.text.clone(),
                doc_text: doc.text.clone(),
                label: 1,
            });
        }
        let wanted = positives.len() * config.ranker.negatives_per_positive;
        for doc in negative_docs(ws, config, query, wanted)? {
            pairs.push(TrainPair {
                query_text: query.text.clone(),
                doc_text: doc.text.clone(),
                label: 0,
            });
        }
    }
    Ok(pairs)
}

/// Training pairs for the rewritten arm. Positives pair each rewrite with
/// its context document; negatives reuse the same sampled documents as the
/// original arm (same per-query seed), paired with the query's first
/// rewrite, so the two arms differ only in query-side text.
pub fn rewritten_pairs(
    ws: &Workspace,
    config: &PipelineConfig,
    rewrites: &[RewrittenExample],
) -> Result<Vec<TrainPair>, CliError> {
    let mut by_query: BTreeMap<&str, Vec<&RewrittenExample>> = BTreeMap::new();
    for rewrite in rewrites {
        by_query
            .entry(rewrite.original_query.id.as_str())
            .or_default()
            .push(rewrite);
    }
    let mut pairs = Vec::new();
    for (query_id, records) in by_query {
        let query = ws
            .train_queries
            .get(query_id)
            .ok_or_else(|| CliError::data(format!("rewritten query '{query_id}' unknown")))?;
        for record in &records {
            let doc = ws.collection.get(&record.context_doc_id).ok_or_else(|| {
                CliError::data(format!(
                    "context document '{}' not in collection",
                    record.context_doc_id
                ))
            })?;
            pairs.push(TrainPair::from_rewrite(record, &doc.text, 1));
        }
        let wanted = records.len() * config.ranker.negatives_per_positive;
        let first = records[0];
        for doc in negative_docs(ws, config, query, wanted)? {
            pairs.push(TrainPair::from_rewrite(first, &doc.text, 0));
        }
    }
    Ok(pairs)
}
