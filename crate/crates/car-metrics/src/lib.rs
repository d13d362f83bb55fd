//! Evaluation toolkit: MRR and nDCG@k over run files and qrels, plus
//! ROUGE-L and an embedding-based text score for rewrite quality.
//! Every operation is a pure function, safe to parallelize across queries.

pub mod ranking;
pub mod report;
pub mod text;

pub use ranking::{ndcg_at_k, reciprocal_rank};
pub use report::{evaluate_run, EvalReport, QueryMetrics};
pub use text::{embed_score, rouge_l, OneHotEmbedder, TextScore, TokenEmbedder};
