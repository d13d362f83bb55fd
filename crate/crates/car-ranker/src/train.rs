//! Minibatch pointwise training of the cross-encoder.

use car_corpus::{RewrittenExample, TrainingExample};
use car_grad::{register_params, GradMap64, OptimizerState64, Tape64};
use rand::seq::SliceRandom;

use crate::error::RankerError;
use crate::loss::pointwise_loss_var;
use crate::model::{Ranker, RankerConfig};
use crate::vocab::{tokenize_pair, Vocabulary};

/// Training recipe. Defaults: Adam at 1e-3, batch 16, sequences capped at
/// the architecture maximum of 512.
#[derive(Debug, Clone)]
pub struct RankerTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub max_len: usize,
}

impl Default for RankerTrainConfig {
    fn default() -> Self {
        RankerTrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 10,
            seed: 0,
            max_len: 512,
        }
    }
}

impl RankerTrainConfig {
    pub fn validate(&self) -> Result<(), RankerError> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.max_len < 4 {
            return Err(RankerError::contract("invalid training configuration"));
        }
        Ok(())
    }
}

/// One training pair: whatever text plays the query role (original or
/// rewritten), the document text, and the binary label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainPair {
    pub query_text: String,
    pub doc_text: String,
    pub label: u8,
}

impl TrainPair {
    pub fn from_examples(examples: &[TrainingExample]) -> Vec<TrainPair> {
        examples
            .iter()
            .map(|e| TrainPair {
                query_text: e.query.text.clone(),
                doc_text: e.doc.text.clone(),
                label: e.label,
            })
            .collect()
    }

    /// Pair a rewritten query with a document text. The original query text
    /// is deliberately not carried along: training on rewrites must never
    /// see it.
    pub fn from_rewrite(rewrite: &RewrittenExample, doc_text: &str, label: u8) -> TrainPair {
        TrainPair {
            query_text: rewrite.rewritten_text.clone(),
            doc_text: doc_text.to_string(),
            label,
        }
    }
}

/// Per-epoch mean losses plus a few sample query-side records, for log
/// inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epoch_mean_loss: Vec<f64>,
    pub sample_queries: Vec<String>,
}

/// Train a fresh ranker on the pairs. The vocabulary comes from the
/// training texts; both labels must be present.
pub fn train_ranker(
    train_config: &RankerTrainConfig,
    model_config: RankerConfig,
    data: &[TrainPair],
) -> Result<(Ranker, TrainLog), RankerError> {
    train_config.validate()?;
    model_config.validate()?;
    if data.is_empty() {
        return Err(RankerError::contract("empty training data"));
    }
    let positives = data.iter().filter(|p| p.label == 1).count();
    if positives == 0 || positives == data.len() {
        return Err(RankerError::contract(
            "training data must contain both labels; single-class loss is degenerate",
        ));
    }
    if data.iter().any(|p| p.label > 1) {
        return Err(RankerError::contract("labels must be 0 or 1"));
    }

    let vocab = Vocabulary::build(
        data.iter()
            .flat_map(|p| [p.query_text.as_str(), p.doc_text.as_str()]),
        model_config.vocab_cap,
    );
    let mut ranker = Ranker::init(vocab, model_config, train_config.seed)?;
    let log = train_in_place(&mut ranker, train_config, data)?;
    Ok((ranker, log))
}

/// Run the minibatch loop against an existing ranker's parameters.
pub fn train_in_place(
    ranker: &mut Ranker,
    config: &RankerTrainConfig,
    data: &[TrainPair],
) -> Result<TrainLog, RankerError> {
    config.validate()?;
    let max_len = config.max_len.min(ranker.config.max_len);
    let pairs: Vec<_> = data
        .iter()
        .map(|p| tokenize_pair(&ranker.vocab, &p.query_text, &p.doc_text, max_len))
        .collect::<Result<_, _>>()?;

    let mut optimizer = OptimizerState64::adam(config.learning_rate);
    let mut rng = car_grad::seeded_rng(config.seed ^ 0x7a11ce);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_mean_loss = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let tape = Tape64::new();
            let vars = register_params(&tape, &ranker.params);
            let mut predictions = Vec::with_capacity(batch.len());
            let mut labels = Vec::with_capacity(batch.len());
            for &i in batch {
                predictions.push(ranker.score_var(&tape, &vars, &pairs[i])?);
                labels.push(data[i].label);
            }
            let stacked = tape.concat(&predictions, 0)?;
            let loss = pointwise_loss_var(&tape, stacked, &labels)?;
            total += loss.item();
            batches += 1;
            let grads = tape.backward(loss)?;
            let mut grad_map = GradMap64::new();
            for (name, var) in &vars {
                grad_map.insert(name.clone(), grads.get_or_zeros(*var));
            }
            optimizer.step(&mut ranker.params, &grad_map)?;
        }
        epoch_mean_loss.push(total / batches.max(1) as f64);
    }

    let sample_queries = data
        .iter()
        .take(5)
        .map(|p| p.query_text.clone())
        .collect();
    Ok(TrainLog {
        epoch_mean_loss,
        sample_queries,
    })
}
