//! Pipeline configuration: one JSON document drives every command.
//! A single top-level seed feeds every stochastic component through
//! [`subseed`], so two runs with the same config are byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub rewriter: RewriterConfig,
    #[serde(default)]
    pub selector: SelectorBlock,
    #[serde(default)]
    pub ranker: RankerBlock,
    #[serde(default)]
    pub eval: EvalBlock,
    #[serde(default)]
    pub seed: u64,
    /// Queries with more tokens than this do not count as ambiguous and
    /// are excluded from rewriting and training.
    #[serde(default = "default_ambiguity_max_tokens")]
    pub ambiguity_max_tokens: usize,
}

fn default_ambiguity_max_tokens() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub collection: PathBuf,
    pub train_queries: PathBuf,
    pub train_qrels: PathBuf,
    /// First-stage run supplying the negative-sampling pool per train query.
    pub train_candidates: PathBuf,
    pub eval_queries: PathBuf,
    pub eval_qrels: PathBuf,
    /// First-stage run supplying the candidate documents to re-rank.
    pub eval_candidates: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientKind {
    Http,
    MockFixture,
    MockContext,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewriterConfig {
    pub client: ClientKind,
    #[serde(default)]
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_model_name")]
    pub model_name: String,
    #[serde(default = "default_style")]
    pub style: String,
    /// Overrides the style's default system instruction when set.
    #[serde(default)]
    pub system_instruction: Option<String>,
    /// JSON list of few-shot (query, description) pairs; defaults bundled.
    #[serde(default)]
    pub few_shot_path: Option<PathBuf>,
    /// Fixture map for the `mock_fixture` client.
    #[serde(default)]
    pub fixtures_path: Option<PathBuf>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub presence_penalty: Option<f64>,
    #[serde(default)]
    pub frequency_penalty: Option<f64>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Select a passage of the positive document as context instead of the
    /// (truncated) full text.
    #[serde(default)]
    pub use_selector: bool,
    /// Base backoff delay in milliseconds for transient failures.
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    #[serde(default = "default_retry_max_attempts")]
    pub retry_max_attempts: u32,
}

fn default_api_key_env() -> String {
    "CAR_API_KEY".into()
}

fn default_retry_base_ms() -> u64 {
    1000
}

fn default_retry_max_attempts() -> u32 {
    5
}

fn default_model_name() -> String {
    "gpt-3.5-turbo".into()
}

fn default_style() -> String {
    "car_context".into()
}

fn default_concurrency() -> usize {
    4
}

impl Default for RewriterConfig {
    fn default() -> Self {
        RewriterConfig {
            client: ClientKind::MockContext,
            endpoint: String::new(),
            api_key_env: default_api_key_env(),
            model_name: default_model_name(),
            style: default_style(),
            system_instruction: None,
            few_shot_path: None,
            fixtures_path: None,
            temperature: None,
            max_tokens: None,
            presence_penalty: None,
            frequency_penalty: None,
            concurrency: default_concurrency(),
            use_selector: false,
            retry_base_ms: default_retry_base_ms(),
            retry_max_attempts: default_retry_max_attempts(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorBlock {
    #[serde(default = "default_selector_kind")]
    pub kind: String,
    #[serde(default = "default_d_emb")]
    pub d_emb: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_selector_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_selector_epochs")]
    pub epochs: usize,
    #[serde(default = "default_negatives_per_positive")]
    pub negatives_per_positive: usize,
}

fn default_selector_kind() -> String {
    "linear".into()
}
fn default_d_emb() -> usize {
    32
}
fn default_hidden() -> usize {
    32
}
fn default_selector_lr() -> f64 {
    1e-3
}
fn default_selector_epochs() -> usize {
    20
}
fn default_negatives_per_positive() -> usize {
    3
}

impl Default for SelectorBlock {
    fn default() -> Self {
        SelectorBlock {
            kind: default_selector_kind(),
            d_emb: default_d_emb(),
            hidden: default_hidden(),
            learning_rate: default_selector_lr(),
            epochs: default_selector_epochs(),
            negatives_per_positive: default_negatives_per_positive(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerBlock {
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default = "default_d_model")]
    pub d_model: usize,
    #[serde(default = "default_d_ff")]
    pub d_ff: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_vocab_cap")]
    pub vocab_cap: usize,
    #[serde(default = "default_ranker_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_ranker_epochs")]
    pub epochs: usize,
    /// Sampled negatives per positive, per query (the 1:n ratio).
    #[serde(default = "default_negative_ratio")]
    pub negatives_per_positive: usize,
}

fn default_layers() -> usize {
    2
}
fn default_heads() -> usize {
    4
}
fn default_d_model() -> usize {
    64
}
fn default_d_ff() -> usize {
    128
}
fn default_max_len() -> usize {
    512
}
fn default_vocab_cap() -> usize {
    8192
}
fn default_ranker_lr() -> f64 {
    1e-3
}
fn default_batch_size() -> usize {
    16
}
fn default_ranker_epochs() -> usize {
    10
}
fn default_negative_ratio() -> usize {
    4
}

impl Default for RankerBlock {
    fn default() -> Self {
        RankerBlock {
            layers: default_layers(),
            heads: default_heads(),
            d_model: default_d_model(),
            d_ff: default_d_ff(),
            max_len: default_max_len(),
            vocab_cap: default_vocab_cap(),
            learning_rate: default_ranker_lr(),
            batch_size: default_batch_size(),
            epochs: default_ranker_epochs(),
            negatives_per_positive: default_negative_ratio(),
        }
    }
}

impl RankerBlock {
    pub fn model_config(&self) -> car_ranker::RankerConfig {
        car_ranker::RankerConfig {
            layers: self.layers,
            heads: self.heads,
            d_model: self.d_model,
            d_ff: self.d_ff,
            max_len: self.max_len,
            vocab_cap: self.vocab_cap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalBlock {
    #[serde(default = "default_ndcg_k")]
    pub ndcg_k: usize,
    /// RR cutoff; omitted means full run depth.
    #[serde(default)]
    pub mrr_cutoff: Option<usize>,
    /// Entries kept per query when writing a run.
    #[serde(default = "default_rerank_depth")]
    pub rerank_depth: usize,
    #[serde(default = "default_tag")]
    pub tag: String,
}

fn default_ndcg_k() -> usize {
    10
}
fn default_rerank_depth() -> usize {
    100
}
fn default_tag() -> String {
    "car".into()
}

impl Default for EvalBlock {
    fn default() -> Self {
        EvalBlock {
            ndcg_k: default_ndcg_k(),
            mrr_cutoff: None,
            rerank_depth: default_rerank_depth(),
            tag: default_tag(),
        }
    }
}

impl PipelineConfig {
    /// Load a config document and apply `--set key=value` overrides
    /// (dot-paths into the JSON tree) and an optional seed override.
    pub fn load(
        path: &Path,
        overrides: &[String],
        seed_override: Option<u64>,
    ) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("config {}: {e}", path.display())))?;
        for assignment in overrides {
            apply_override(&mut value, assignment)?;
        }
        if let Some(seed) = seed_override {
            value["seed"] = serde_json::json!(seed);
        }
        let config: PipelineConfig = serde_json::from_value(value)
            .map_err(|e| CliError::data(format!("config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Check that every referenced input path exists.
    pub fn validate_paths(&self) -> Result<(), CliError> {
        let p = &self.paths;
        for (name, path) in [
            ("collection", &p.collection),
            ("train_queries", &p.train_queries),
            ("train_qrels", &p.train_qrels),
            ("train_candidates", &p.train_candidates),
            ("eval_queries", &p.eval_queries),
            ("eval_qrels", &p.eval_qrels),
            ("eval_candidates", &p.eval_candidates),
        ] {
            if !path.exists() {
                return Err(CliError::data(format!(
                    "{name} path does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn style(&self) -> Result<car_rewriter::PromptStyle, CliError> {
        let kind = car_rewriter::PromptKind::parse(&self.rewriter.style)?;
        let mut style = car_rewriter::PromptStyle::new(kind);
        if let Some(instruction) = &self.rewriter.system_instruction {
            style.system_instruction = instruction.clone();
        }
        if let Some(path) = &self.rewriter.few_shot_path {
            let text = std::fs::read_to_string(path)?;
            style.few_shot = serde_json::from_str(&text)
                .map_err(|e| CliError::data(format!("few-shot file: {e}")))?;
        }
        Ok(style)
    }

    pub fn generation_params(&self) -> Result<car_rewriter::GenerationParams, CliError> {
        let kind = car_rewriter::PromptKind::parse(&self.rewriter.style)?;
        let mut params =
            car_rewriter::GenerationParams::defaults_for(kind, self.rewriter.model_name.clone());
        if let Some(t) = self.rewriter.temperature {
            params.temperature = t;
        }
        if let Some(m) = self.rewriter.max_tokens {
            params.max_tokens = m;
        }
        if let Some(p) = self.rewriter.presence_penalty {
            params.presence_penalty = p;
        }
        if let Some(f) = self.rewriter.frequency_penalty {
            params.frequency_penalty = f;
        }
        params.validate()?;
        Ok(params)
    }
}

fn apply_override(value: &mut serde_json::Value, assignment: &str) -> Result<(), CliError> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(CliError::usage(format!(
            "--set expects key=value, got '{assignment}'"
        )));
    };
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = value;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if i + 1 == segments.len() {
            cursor[segment] = parsed;
            return Ok(());
        }
        if !cursor[segment].is_object() {
            cursor[segment] = serde_json::json!({});
        }
        cursor = &mut cursor[segment];
    }
    unreachable!("split always yields at least one segment")
}

/// Stable per-component sub-seed: FNV-1a over the tag, mixed with the base
/// seed. Keeps stochastic components independent while everything still
/// derives from the one configured seed.
pub fn subseed(base: u64, tag: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in tag.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash ^ base
}

/// Per-query sub-seed for negative sampling.
pub fn query_seed(base: u64, query_id: &str) -> u64 {
    subseed(base, &format!("negatives:{query_id}"))
}

/// A ready-to-write config skeleton pointing at a data directory.
pub fn example_config(data_dir: &Path, output_dir: &Path) -> PipelineConfig {
    PipelineConfig {
        paths: PathsConfig {
            collection: data_dir.join("collection.tsv"),
            train_queries: data_dir.join("train_queries.tsv"),
            train_qrels: data_dir.join("train_qrels.txt"),
            train_candidates: data_dir.join("train_candidates.trec"),
            eval_queries: data_dir.join("eval_queries.tsv"),
            eval_qrels: data_dir.join("eval_qrels.txt"),
            eval_candidates: data_dir.join("eval_candidates.trec"),
            output_dir: output_dir.to_path_buf(),
        },
        rewriter: RewriterConfig::default(),
        selector: SelectorBlock::default(),
        ranker: RankerBlock::default(),
        eval: EvalBlock::default(),
        seed: 0,
        ambiguity_max_tokens: 4,
    }
}

/// Overrides applied to a config already in memory (used by tests).
pub fn apply_overrides_in_memory(
    config: &PipelineConfig,
    overrides: &BTreeMap<String, serde_json::Value>,
) -> Result<PipelineConfig, CliError> {
    let mut value = serde_json::to_value(config).expect("config serializes");
    for (key, v) in overrides {
        apply_override(&mut value, &format!("{key}={v}"))?;
    }
    serde_json::from_value(value).map_err(|e| CliError::data(e.to_string()))
}
