//! Selector training: listwise softmax cross-entropy over each query's
//! candidate set (one positive passage, several negatives).

use car_grad::{register_params, GradMap64, OptimizerState64, Tape64, Var64};
use rand::seq::SliceRandom;

use crate::encoder::SelectorVocab;
use crate::error::SelectorError;
use crate::select::{Selector, SelectorKind};

/// Training recipe. Defaults: Adam at 1e-3, three negatives per positive.
#[derive(Debug, Clone)]
pub struct SelectorTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for SelectorTrainConfig {
    fn default() -> Self {
        SelectorTrainConfig {
            learning_rate: 1e-3,
            epochs: 20,
            negatives_per_positive: 3,
            seed: 0,
        }
    }
}

impl SelectorTrainConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.learning_rate <= 0.0 {
            return Err(SelectorError::contract("learning rate must be positive"));
        }
        if self.negatives_per_positive == 0 {
            return Err(SelectorError::contract(
                "negatives_per_positive must be positive",
            ));
        }
        Ok(())
    }
}

/// One training triple: a query, its pertinent passage, and distractor
/// passages from the same document or pool.
#[derive(Debug, Clone)]
pub struct SelectionExample {
    pub query: String,
    pub positive: String,
    pub negatives: Vec<String>,
}

/// Sizes for selector initialization.
#[derive(Debug, Clone, Copy)]
pub struct SelectorDims {
    pub d_emb: usize,
    pub hidden: usize,
}

impl Default for SelectorDims {
    fn default() -> Self {
        SelectorDims {
            d_emb: 32,
            hidden: 32,
        }
    }
}

fn candidate_loss<'t>(
    selector: &Selector,
    tape: &'t Tape64,
    vars: &car_grad::ParamVars<'t, f64>,
    example: &SelectionExample,
) -> Result<Var64<'t>, SelectorError> {
    let vocab = selector.vocab();
    let query_ids = vocab.token_ids(&example.query);
    let mut scores: Vec<Var64<'t>> = Vec::with_capacity(1 + example.negatives.len());
    match selector {
        Selector::Linear(linear) => {
            let query_vec = linear.encode_var(tape, vars, &query_ids)?;
            for text in std::iter::once(&example.positive).chain(&example.negatives) {
                let passage_vec = linear.encode_var(tape, vars, &vocab.token_ids(text))?;
                scores.push(query_vec.dot(passage_vec)?);
            }
        }
        Selector::Attention(attention) => {
            let query_vec = attention.query_rep_var(tape, vars, &query_ids)?;
            for text in std::iter::once(&example.positive).chain(&example.negatives) {
                let (score, _, _) = attention.passage_score_var(
                    tape,
                    vars,
                    query_vec,
                    &vocab.token_ids(text),
                )?;
                scores.push(score);
            }
        }
    }
    let n = scores.len();
    let stacked = tape.concat(&scores, 0)?;
    let probs = stacked
        .reshape(vec![1, n])?
        .softmax_rows()?
        .reshape(vec![n])?;
    // Negative log-likelihood of the positive (candidate 0).
    Ok(probs.slice(0, 1)?.ln()?.neg()?)
}

/// Train a fresh selector on the triples. The vocabulary is built from the
/// training texts; returns the selector and per-epoch mean losses.
pub fn train_selector(
    kind: SelectorKind,
    dims: SelectorDims,
    config: &SelectorTrainConfig,
    data: &[SelectionExample],
) -> Result<(Selector, Vec<f64>), SelectorError> {
    config.validate()?;
    if data.is_empty() {
        return Err(SelectorError::contract("empty training data"));
    }
    for (i, example) in data.iter().enumerate() {
        if example.negatives.is_empty() {
            return Err(SelectorError::contract(format!(
                "training triple {i} has no negatives"
            )));
        }
    }

    let vocab = SelectorVocab::build(
        data.iter()
            .flat_map(|e| {
                std::iter::once(e.query.as_str())
                    .chain(std::iter::once(e.positive.as_str()))
                    .chain(e.negatives.iter().map(String::as_str))
            }),
    );
    let mut selector = Selector::init(kind, vocab, dims.d_emb, dims.hidden, config.seed);
    let losses = train_in_place(&mut selector, config, data)?;
    Ok((selector, losses))
}

/// Run the training loop against an existing selector's parameters.
pub fn train_in_place(
    selector: &mut Selector,
    config: &SelectorTrainConfig,
    data: &[SelectionExample],
) -> Result<Vec<f64>, SelectorError> {
    config.validate()?;
    let mut optimizer = OptimizerState64::adam(config.learning_rate);
    let mut rng = car_grad::seeded_rng(config.seed ^ 0x5e1ec7);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let example = &data[i];
            let tape = Tape64::new();
            let vars = register_params(&tape, selector.params());
            let loss = candidate_loss(selector, &tape, &vars, example)?;
            total += loss.item();
            let grads = tape.backward(loss)?;
            let mut grad_map = GradMap64::new();
            for (name, var) in &vars {
                grad_map.insert(name.clone(), grads.get_or_zeros(*var));
            }
            match selector {
                Selector::Linear(s) => optimizer.step(&mut s.params, &grad_map)?,
                Selector::Attention(s) => optimizer.step(&mut s.params, &grad_map)?,
            }
        }
        epoch_losses.push(total / data.len() as f64);
    }
    Ok(epoch_losses)
}

/// Fraction of triples whose positive passage outranks every negative
/// (ties resolve toward the positive, matching the selection tie rule).
pub fn selection_accuracy(
    selector: &Selector,
    data: &[SelectionExample],
) -> Result<f64, SelectorError> {
    if data.is_empty() {
        return Err(SelectorError::contract("empty evaluation data"));
    }
    let mut correct = 0usize;
    for example in data {
        let positive = selector.score(&example.query, &example.positive)?;
        let mut beaten = false;
        for negative in &example.negatives {
            if selector.score(&example.query, negative)? > positive {
                beaten = true;
                break;
            }
        }
        if !beaten {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_data() -> Vec<SelectionExample> {
        vec![
            SelectionExample {
                query: "red apple".into(),
                positive: "the red apple hangs on the tree".into(),
                negatives: vec!["blue sky above".into(), "green grass below".into()],
            },
            SelectionExample {
                query: "blue sky".into(),
                positive: "the blue sky above".into(),
                negatives: vec!["red apple tree".into(), "green grass below".into()],
            },
        ]
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let config = SelectorTrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let dims = SelectorDims {
            d_emb: 6,
            hidden: 4,
        };
        let (trained, losses) =
            train_selector(SelectorKind::Linear, dims, &config, &tiny_data()).unwrap();
        assert!(losses.is_empty());
        let vocab = trained.vocab().clone();
        let fresh = Selector::init(SelectorKind::Linear, vocab, 6, 4, config.seed);
        assert_eq!(trained.params(), fresh.params());
    }

    #[test]
    fn same_seed_gives_identical_params() {
        let config = SelectorTrainConfig {
            epochs: 3,
            seed: 9,
            ..Default::default()
        };
        let dims = SelectorDims {
            d_emb: 6,
            hidden: 4,
        };
        let (a, _) = train_selector(SelectorKind::Linear, dims, &config, &tiny_data()).unwrap();
        let (b, _) = train_selector(SelectorKind::Linear, dims, &config, &tiny_data()).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn empty_data_is_contract_error() {
        let config = SelectorTrainConfig::default();
        let dims = SelectorDims::default();
        assert!(matches!(
            train_selector(SelectorKind::Linear, dims, &config, &[]),
            Err(SelectorError::Contract(_))
        ));
    }

    #[test]
    fn triple_without_negatives_is_contract_error() {
        let config = SelectorTrainConfig::default();
        let dims = SelectorDims::default();
        let data = vec![SelectionExample {
            query: "q".into(),
            positive: "p".into(),
            negatives: vec![],
        }];
        assert!(matches!(
            train_selector(SelectorKind::Linear, dims, &config, &data),
            Err(SelectorError::Contract(_))
        ));
    }
}
