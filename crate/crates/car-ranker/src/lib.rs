//! Desk-scale cross-encoder ranker: `[CLS] q [SEP] d [SEP]` pair encoding,
//! pointwise cross-entropy training, and candidate re-ranking with no
//! rewriter in the inference path.

pub mod error;
pub mod loss;
pub mod model;
pub mod rerank;
pub mod train;
pub mod vocab;

pub use error::RankerError;
pub use loss::{pointwise_loss, pointwise_loss_var, EPS};
pub use model::{Ranker, RankerConfig};
pub use rerank::rerank;
pub use train::{train_in_place, train_ranker, RankerTrainConfig, TrainLog, TrainPair};
pub use vocab::{tokenize_pair, TokenizedPair, Vocabulary, CLS, PAD, SEP, UNK};
