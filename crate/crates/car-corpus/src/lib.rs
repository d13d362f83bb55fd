//! Corpus layer: queries, documents, judgments, runs and rewritten
//! training sets, with strict readers/writers for the TREC and MS MARCO
//! style text formats, sentence-window passage segmentation and seeded
//! negative sampling.
//!
//! All types here are plain values; loaders and writers are reentrant and
//! keep no shared state.

pub mod error;
pub mod qrels;
pub mod rewrites;
pub mod run;
pub mod sampling;
pub mod segment;
pub mod tokenize;
pub mod tsv;
pub mod types;

pub use error::CorpusError;
pub use qrels::{load_qrels, write_qrels};
pub use rewrites::{load_rewrites, save_rewrites};
pub use run::{format_run_entry, read_run, validate_run, write_run};
pub use sampling::{sample_negative_ids, sample_negatives, NegativeSample};
pub use segment::{segment_passages, split_sentences, SENTENCES_PER_PASSAGE};
pub use tokenize::tokenize;
pub use tsv::{load_collection, load_queries, write_collection, write_queries};
pub use types::{
    Document, Judgment, JudgmentSet, Passage, Query, RewrittenExample, RunEntry, TrainingExample,
};
