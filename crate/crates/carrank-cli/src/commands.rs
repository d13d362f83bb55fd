//! Command implementations behind the CLI verbs. Everything here is a
//! library function so the acceptance suite can drive the pipeline
//! in-process.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use car_corpus::{load_rewrites, read_run, save_rewrites, write_run, RunEntry, TrainingExample};
use car_metrics::{evaluate_run, EvalReport};
use car_ranker::{rerank, Ranker, RankerTrainConfig, TrainPair};
use car_rewriter::{
    rewrite_dataset, ChatClient, ContextEchoClient, CountingClient, HttpChatClient,
    MockFixtureClient, RetryPolicy, RewriteDatasetConfig,
};
use car_selector::{
    train_selector, SelectionExample, Selector, SelectorDims, SelectorKind, SelectorTrainConfig,
};
use serde::Serialize;

use crate::config::{subseed, ClientKind, PipelineConfig};
use crate::data::{
    ambiguous_train_queries, load_workspace, original_pairs, positive_examples, rewritten_pairs,
    Workspace,
};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub train_queries: usize,
    pub train_judgments: usize,
    pub train_candidate_queries: usize,
    pub eval_queries: usize,
    pub eval_judgments: usize,
    pub eval_candidate_queries: usize,
    pub ambiguous_train_queries: usize,
}

pub fn run_ingest(config: &PipelineConfig) -> Result<IngestSummary, CliError> {
    let ws = load_workspace(config)?;
    Ok(IngestSummary {
        documents: ws.collection.len(),
        train_queries: ws.train_queries.len(),
        train_judgments: ws.train_qrels.len(),
        train_candidate_queries: ws.train_candidates.len(),
        eval_queries: ws.eval_queries.len(),
        eval_judgments: ws.eval_qrels.len(),
        eval_candidate_queries: ws.eval_candidates.len(),
        ambiguous_train_queries: ambiguous_train_queries(&ws, config).len(),
    })
}

fn build_client(config: &PipelineConfig) -> Result<Arc<dyn ChatClient>, CliError> {
    Ok(match config.rewriter.client {
        ClientKind::MockContext => Arc::new(ContextEchoClient::default()),
        ClientKind::MockFixture => {
            let path = config.rewriter.fixtures_path.as_ref().ok_or_else(|| {
                CliError::data("mock_fixture client requires rewriter.fixtures_path")
            })?;
            Arc::new(MockFixtureClient::load(path)?)
        }
        ClientKind::Http => {
            if config.rewriter.endpoint.is_empty() {
                return Err(CliError::data("http client requires rewriter.endpoint"));
            }
            let api_key = std::env::var(&config.rewriter.api_key_env).ok();
            Arc::new(HttpChatClient::new(config.rewriter.endpoint.clone(), api_key)?)
        }
    })
}

/// Weak-label selector triples from (query, positive document) pairs: the
/// passage with the highest query-token overlap is the positive, the
/// document's other passages are the negatives. Pairs with no overlap or a
/// single passage are skipped.
fn selector_triples_from(positives: &[TrainingExample]) -> Vec<SelectionExample> {
    let mut triples = Vec::new();
    for example in positives {
        let passages = car_corpus::segment_passages(&example.doc);
        if passages.len() < 2 {
            continue;
        }
        let query_tokens = car_corpus::tokenize(&example.query.text);
        let overlap = |text: &str| -> usize {
            let tokens = car_corpus::tokenize(text);
            query_tokens.iter().filter(|t| tokens.contains(t)).count()
        };
        let (best, best_overlap) = passages
            .iter()
            .map(|p| overlap(&p.text))
            .enumerate()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("at least two passages");
        if best_overlap == 0 {
            continue;
        }
        triples.push(SelectionExample {
            query: example.query.text.clone(),
            positive: passages[best].text.clone(),
            negatives: passages
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != best)
                .map(|(_, p)| p.text.clone())
                .collect(),
        });
    }
    triples
}

fn train_context_selector(
    config: &PipelineConfig,
    positives: &[TrainingExample],
) -> Result<Selector, CliError> {
    let triples = selector_triples_from(positives);
    if triples.is_empty() {
        return Err(CliError::data(
            "selector requested but no (query, passage) overlap triples could be derived",
        ));
    }
    let kind = SelectorKind::parse(&config.selector.kind)?;
    let dims = SelectorDims {
        d_emb: config.selector.d_emb,
        hidden: config.selector.hidden,
    };
    let train_config = SelectorTrainConfig {
        learning_rate: config.selector.learning_rate,
        epochs: config.selector.epochs,
        negatives_per_positive: config.selector.negatives_per_positive,
        seed: subseed(config.seed, "selector"),
    };
    let (selector, _) = train_selector(kind, dims, &train_config, &triples)?;
    Ok(selector)
}

#[derive(Debug, Clone, Serialize)]
pub struct RewriteSummary {
    pub rewrites: usize,
    pub fallbacks: usize,
    pub path: PathBuf,
    pub client_calls: u64,
}

pub fn rewrites_path(config: &PipelineConfig) -> PathBuf {
    config.paths.output_dir.join("rewrites.jsonl")
}

pub fn run_rewrite(config: &PipelineConfig) -> Result<RewriteSummary, CliError> {
    let client = CountingClient::new(build_client(config)?);
    run_rewrite_with(config, &client)
}

/// Rewrite with a caller-supplied client (the pipeline threads one
/// counting client through all phases to account for every call).
pub fn run_rewrite_with(
    config: &PipelineConfig,
    client: &CountingClient,
) -> Result<RewriteSummary, CliError> {
    let ws = load_workspace(config)?;
    let queries = ambiguous_train_queries(&ws, config);
    let positives = positive_examples(&ws, &queries)?;
    if positives.is_empty() {
        return Err(CliError::data(
            "no (ambiguous query, positive document) pairs to rewrite",
        ));
    }

    let selector = if config.rewriter.use_selector {
        Some(train_context_selector(config, &positives)?)
    } else {
        None
    };

    let style = config.style()?;
    let params = config.generation_params()?;
    let dataset_config = RewriteDatasetConfig {
        concurrency: config.rewriter.concurrency,
        policy: RetryPolicy {
            base_delay: Duration::from_millis(config.rewriter.retry_base_ms),
            factor: 2,
            max_attempts: config.rewriter.retry_max_attempts,
        },
        failure_threshold: 0.5,
    };
    let outcome = rewrite_dataset(
        client,
        &style,
        &params,
        &positives,
        selector.as_ref(),
        &dataset_config,
    )?;

    std::fs::create_dir_all(&config.paths.output_dir)?;
    let path = rewrites_path(config);
    save_rewrites(&path, &outcome.examples)?;
    Ok(RewriteSummary {
        rewrites: outcome.examples.len(),
        fallbacks: outcome.fallbacks,
        path,
        client_calls: client.calls(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Original,
    Rewritten,
}

impl QueryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryMode::Original => "original",
            QueryMode::Rewritten => "rewritten",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "original" => Ok(QueryMode::Original),
            "rewritten" => Ok(QueryMode::Rewritten),
            other => Err(CliError::usage(format!(
                "--queries must be 'original' or 'rewritten', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub model_dir: PathBuf,
    pub pairs: usize,
    pub epoch_mean_loss: Vec<f64>,
}

pub fn model_dir(config: &PipelineConfig, mode: QueryMode) -> PathBuf {
    config
        .paths
        .output_dir
        .join(format!("model_{}", mode.as_str()))
}

fn training_pairs(
    ws: &Workspace,
    config: &PipelineConfig,
    mode: QueryMode,
) -> Result<Vec<TrainPair>, CliError> {
    match mode {
        QueryMode::Original => original_pairs(ws, config),
        QueryMode::Rewritten => {
            let path = rewrites_path(config);
            if !path.exists() {
                return Err(CliError::data(format!(
                    "rewrites file {} not found; run the rewrite command first",
                    path.display()
                )));
            }
            let rewrites = load_rewrites(&path)?;
            rewritten_pairs(ws, config, &rewrites)
        }
    }
}

pub fn run_train(config: &PipelineConfig, mode: QueryMode) -> Result<TrainSummary, CliError> {
    let ws = load_workspace(config)?;
    let pairs = training_pairs(&ws, config, mode)?;
    let train_config = RankerTrainConfig {
        learning_rate: config.ranker.learning_rate,
        batch_size: config.ranker.batch_size,
        epochs: config.ranker.epochs,
        // One seed for both arms: identical initialization and shuffle
        // schedule, so the arms differ only in their query-side text.
        seed: subseed(config.seed, "ranker"),
        max_len: config.ranker.max_len,
    };
    let (ranker, log) = car_ranker::train_ranker(&train_config, config.ranker.model_config(), &pairs)?;

    let dir = model_dir(config, mode);
    ranker.save(&dir)?;
    let log_json = serde_json::json!({
        "epoch_mean_loss": log.epoch_mean_loss,
        "sample_queries": log.sample_queries,
        "pairs": pairs.len(),
        "queries_mode": mode.as_str(),
    });
    std::fs::write(
        dir.join("train_log.json"),
        serde_json::to_string_pretty(&log_json).expect("log serializes"),
    )?;
    Ok(TrainSummary {
        model_dir: dir,
        pairs: pairs.len(),
        epoch_mean_loss: log.epoch_mean_loss,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RerankSummary {
    pub run_path: PathBuf,
    pub queries: usize,
    pub skipped_queries: usize,
}

/// Re-rank eval candidates with a trained model. The raw eval query text
/// is used verbatim; no rewriter client exists anywhere in this path.
pub fn run_rerank(
    config: &PipelineConfig,
    model: &Path,
    out: Option<&Path>,
) -> Result<RerankSummary, CliError> {
    let ws = load_workspace(config)?;
    let ranker = Ranker::load(model)?;
    let mut entries: Vec<RunEntry> = Vec::new();
    let mut skipped = 0usize;
    let mut ranked_queries = 0usize;
    for (query_id, query) in &ws.eval_queries {
        let Some(pool) = ws.eval_candidates.get(query_id) else {
            skipped += 1;
            continue;
        };
        let candidates: Vec<car_corpus::Document> = pool
            .iter()
            .map(|doc_id| {
                ws.collection.get(doc_id).cloned().ok_or_else(|| {
                    CliError::data(format!("candidate '{doc_id}' not in collection"))
                })
            })
            .collect::<Result<_, _>>()?;
        entries.extend(rerank(
            &ranker,
            query,
            &candidates,
            config.eval.rerank_depth,
            &config.eval.tag,
        )?);
        ranked_queries += 1;
    }

    std::fs::create_dir_all(&config.paths.output_dir)?;
    let run_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.paths.output_dir.join("run.trec"));
    write_run(&run_path, &entries)?;
    Ok(RerankSummary {
        run_path,
        queries: ranked_queries,
        skipped_queries: skipped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateSummary {
    pub report: EvalReport,
    pub json_path: PathBuf,
}

pub fn run_evaluate(
    config: &PipelineConfig,
    run_path: &Path,
    out: Option<&Path>,
) -> Result<EvaluateSummary, CliError> {
    let entries = read_run(run_path)?;
    let qrels = car_corpus::load_qrels(&config.paths.eval_qrels)?;
    let report = evaluate_run(&entries, &qrels, config.eval.ndcg_k, config.eval.mrr_cutoff)?;
    std::fs::create_dir_all(&config.paths.output_dir)?;
    let json_path = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let stem = run_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("run");
        config.paths.output_dir.join(format!("eval_{stem}.json"))
    });
    std::fs::write(&json_path, report.to_json())?;
    Ok(EvaluateSummary { report, json_path })
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub rewrite: RewriteSummary,
    pub train_original: TrainSummary,
    pub train_rewritten: TrainSummary,
    pub run_original: PathBuf,
    pub run_rewritten: PathBuf,
    pub eval_original: EvalReport,
    pub eval_rewritten: EvalReport,
    /// Rewriter-client calls observed after the rewrite phase finished;
    /// re-ranking and evaluation must not add any.
    pub client_calls_after_rewrite: u64,
    pub client_calls_total: u64,
    /// Relative mean-nDCG improvement of the rewritten arm over the
    /// original arm.
    pub ndcg_relative_improvement: f64,
}

/// The whole training-and-inference flow: rewrite the ambiguous training
/// queries, train one ranker per arm, re-rank the eval candidates with
/// both, and evaluate both runs.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary, CliError> {
    let client = CountingClient::new(build_client(config)?);
    let rewrite = run_rewrite_with(config, &client)?;
    let calls_after_rewrite = client.calls();

    let train_original = run_train(config, QueryMode::Original)?;
    let train_rewritten = run_train(config, QueryMode::Rewritten)?;

    let run_original = config.paths.output_dir.join("run_original.trec");
    let run_rewritten = config.paths.output_dir.join("run_rewritten.trec");
    run_rerank(config, &train_original.model_dir, Some(&run_original))?;
    run_rerank(config, &train_rewritten.model_dir, Some(&run_rewritten))?;

    let eval_original = run_evaluate(config, &run_original, None)?.report;
    let eval_rewritten = run_evaluate(config, &run_rewritten, None)?.report;

    let improvement = if eval_original.mean_ndcg > 0.0 {
        (eval_rewritten.mean_ndcg - eval_original.mean_ndcg) / eval_original.mean_ndcg
    } else if eval_rewritten.mean_ndcg > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    Ok(PipelineSummary {
        rewrite,
        train_original,
        train_rewritten,
        run_original,
        run_rewritten,
        eval_original,
        eval_rewritten,
        client_calls_after_rewrite: calls_after_rewrite,
        client_calls_total: client.calls(),
        ndcg_relative_improvement: improvement,
    })
}
