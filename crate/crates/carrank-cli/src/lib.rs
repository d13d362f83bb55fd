//! Context-aware rewrite-and-rank pipeline. The library side exposes the
//! configuration model, the synthetic corpus generator and the command
//! implementations; the `carrank` binary is a thin argument-parsing shell
//! over these.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod synth;

pub use commands::{
    model_dir, rewrites_path, run_evaluate, run_ingest, run_pipeline, run_rerank, run_rewrite,
    run_rewrite_with, run_train, EvaluateSummary, IngestSummary, PipelineSummary, QueryMode,
    RerankSummary, RewriteSummary, TrainSummary,
};
pub use config::{example_config, query_seed, subseed, ClientKind, PipelineConfig};
pub use data::{ambiguous_train_queries, is_ambiguous, load_workspace, Workspace};
pub use error::CliError;
pub use synth::{generate, selector_triples, write_corpus, SynthConfig, SynthCorpus};
