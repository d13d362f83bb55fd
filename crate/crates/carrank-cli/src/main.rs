use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carrank::{
    example_config, generate, run_evaluate, run_ingest, run_pipeline, run_rerank, run_rewrite,
    run_train, write_corpus, CliError, PipelineConfig, QueryMode, SynthConfig,
};

#[derive(Parser)]
#[command(
    name = "carrank",
    about = "Rewrite ambiguous training queries with an LLM, train a cross-encoder on the \
             rewrites, re-rank and evaluate — no LLM calls at inference",
    version
)]
struct Cli {
    /// Pipeline configuration document (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override any config field by dot-path, e.g. --set ranker.epochs=3.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate all input files and report record counts.
    Ingest,
    /// Rewrite ambiguous training queries into rewrites.jsonl.
    Rewrite,
    /// Train the ranker on original or rewritten queries.
    Train {
        #[arg(long, value_name = "original|rewritten")]
        queries: String,
    },
    /// Re-rank the eval candidates with a trained model.
    Rerank {
        /// Model directory (defaults to the rewritten-arm model).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output run file (defaults to <output_dir>/run.trec).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a run file against the eval qrels.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        /// Output report path (defaults next to the run).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run everything: rewrite, train both arms, rerank, evaluate.
    Pipeline,
    /// Generate the bundled synthetic corpus plus a ready config.
    Synth {
        /// Directory to write the corpus and config.json into.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        synth_seed: u64,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("--config is required for this command"))?;
    PipelineConfig::load(path, &cli.set, cli.seed)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest => {
            let summary = run_ingest(&load_config(&cli)?)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary"));
        }
        Command::Rewrite => {
            let summary = run_rewrite(&load_config(&cli)?)?;
            println!(
                "wrote {} rewrites ({} fallbacks) to {}",
                summary.rewrites,
                summary.fallbacks,
                summary.path.display()
            );
        }
        Command::Train { queries } => {
            let mode = QueryMode::parse(queries)?;
            let summary = run_train(&load_config(&cli)?, mode)?;
            println!(
                "trained on {} pairs ({} queries mode); model at {}",
                summary.pairs,
                mode.as_str(),
                summary.model_dir.display()
            );
            if let (Some(first), Some(last)) = (
                summary.epoch_mean_loss.first(),
                summary.epoch_mean_loss.last(),
            ) {
                println!("epoch mean loss: {first:.4} -> {last:.4}");
            }
        }
        Command::Rerank { model, out } => {
            let config = load_config(&cli)?;
            let model = model
                .clone()
                .unwrap_or_else(|| carrank::model_dir(&config, QueryMode::Rewritten));
            let summary = run_rerank(&config, &model, out.as_deref())?;
            println!(
                "re-ranked {} queries ({} skipped) into {}",
                summary.queries,
                summary.skipped_queries,
                summary.run_path.display()
            );
        }
        Command::Evaluate { run, out } => {
            let config = load_config(&cli)?;
            let summary = run_evaluate(&config, run, out.as_deref())?;
            print!("{}", summary.report.render_table());
            println!("report written to {}", summary.json_path.display());
        }
        Command::Pipeline => {
            let summary = run_pipeline(&load_config(&cli)?)?;
            println!("rewrites: {} ({} fallbacks)", summary.rewrite.rewrites, summary.rewrite.fallbacks);
            println!(
                "original  queries: mean RR {:.4}, mean nDCG@{} {:.4}",
                summary.eval_original.mean_rr,
                summary.eval_original.ndcg_k,
                summary.eval_original.mean_ndcg
            );
            println!(
                "rewritten queries: mean RR {:.4}, mean nDCG@{} {:.4}",
                summary.eval_rewritten.mean_rr,
                summary.eval_rewritten.ndcg_k,
                summary.eval_rewritten.mean_ndcg
            );
            println!(
                "relative nDCG improvement: {:+.1}%",
                100.0 * summary.ndcg_relative_improvement
            );
            println!(
                "rewriter calls during rerank/evaluate: {}",
                summary.client_calls_total - summary.client_calls_after_rewrite
            );
        }
        Command::Synth { out, synth_seed } => {
            let synth_config = SynthConfig {
                seed: *synth_seed,
                ..Default::default()
            };
            let corpus = generate(&synth_config);
            write_corpus(&corpus, out)?;
            let config = example_config(out, &out.join("output"));
            std::fs::write(
                out.join("config.json"),
                serde_json::to_string_pretty(&config).expect("config serializes"),
            )?;
            println!(
                "wrote {} documents, {} train / {} eval queries, and config.json to {}",
                corpus.collection.len(),
                corpus.train_queries.len(),
                corpus.eval_queries.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; fold every parse problem into
            // the usage exit code.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
