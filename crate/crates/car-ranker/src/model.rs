//! The miniature cross-encoder: token + learned positional embeddings,
//! a stack of transformer encoder layers (multi-head self-attention and a
//! feed-forward block, each with residual connection and layer norm), and
//! a sigmoid classification head on the `[CLS]` position.

use std::fs;
use std::path::Path;

use car_grad::{register_params, ParamMap64, ParamVars, Tape64, Tensor64, Var64};
use serde::{Deserialize, Serialize};

use crate::error::RankerError;
use crate::vocab::{tokenize_pair, TokenizedPair, Vocabulary, DEFAULT_VOCAB_CAP};

/// Architecture sizes. The default is a faithful miniature of the usual
/// 12-layer/12-head/768-wide cross-encoder at 2/4/64.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_cap: usize,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            layers: 2,
            heads: 4,
            d_model: 64,
            d_ff: 128,
            max_len: 512,
            vocab_cap: DEFAULT_VOCAB_CAP,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<(), RankerError> {
        if self.d_model % self.heads != 0 {
            return Err(RankerError::contract(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        if self.layers == 0 || self.d_model == 0 || self.d_ff == 0 || self.max_len < 4 {
            return Err(RankerError::contract("degenerate architecture sizes"));
        }
        Ok(())
    }
}

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct Ranker {
    pub vocab: Vocabulary,
    pub config: RankerConfig,
    pub params: ParamMap64,
}

impl Ranker {
    pub fn init(vocab: Vocabulary, config: RankerConfig, seed: u64) -> Result<Self, RankerError> {
        config.validate()?;
        let mut rng = car_grad::seeded_rng(seed);
        let mut params = ParamMap64::new();
        let d = config.d_model;
        params.insert(
            "embed.token",
            car_grad::xavier_uniform(vocab.size(), d, &mut rng),
        );
        params.insert(
            "embed.position",
            car_grad::xavier_uniform(config.max_len, d, &mut rng),
        );
        for layer in 0..config.layers {
            for name in ["w_q", "w_k", "w_v", "w_o"] {
                params.insert(
                    format!("layer{layer}.attn.{name}"),
                    car_grad::xavier_uniform(d, d, &mut rng),
                );
            }
            for name in ["b_q", "b_k", "b_v", "b_o"] {
                params.insert(format!("layer{layer}.attn.{name}"), Tensor64::zeros(vec![d]));
            }
            params.insert(
                format!("layer{layer}.ff.w1"),
                car_grad::xavier_uniform(d, config.d_ff, &mut rng),
            );
            params.insert(format!("layer{layer}.ff.b1"), Tensor64::zeros(vec![config.d_ff]));
            params.insert(
                format!("layer{layer}.ff.w2"),
                car_grad::xavier_uniform(config.d_ff, d, &mut rng),
            );
            params.insert(format!("layer{layer}.ff.b2"), Tensor64::zeros(vec![d]));
            for norm in ["norm1", "norm2"] {
                params.insert(
                    format!("layer{layer}.{norm}.gamma"),
                    Tensor64::new(vec![d], vec![1.0; d]).expect("shape"),
                );
                params.insert(format!("layer{layer}.{norm}.beta"), Tensor64::zeros(vec![d]));
            }
        }
        params.insert(
            "head.w",
            Tensor64::vector(
                car_grad::xavier_uniform(1, d, &mut rng).values().to_vec(),
            ),
        );
        params.insert("head.b", Tensor64::zeros(vec![1]));
        Ok(Ranker {
            vocab,
            config,
            params,
        })
    }

    /// Residual + layer norm with learned gain and shift.
    fn add_norm<'t>(
        &self,
        vars: &ParamVars<'t, f64>,
        residual: Var64<'t>,
        sublayer: Var64<'t>,
        gamma: &str,
        beta: &str,
        rows: usize,
    ) -> Result<Var64<'t>, RankerError> {
        let normed = residual.add(sublayer)?.layer_norm_rows(LN_EPS)?;
        Ok(normed
            .mul(vars[gamma].broadcast_rows(rows)?)?
            .add(vars[beta].broadcast_rows(rows)?)?)
    }

    /// Relevance logit for the unpadded token ids (the `[PAD]` tail of a
    /// tokenized pair is excluded by `real_len`, so padding cannot affect
    /// the score).
    pub fn logit_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        pair: &TokenizedPair,
    ) -> Result<Var64<'t>, RankerError> {
        let ids = &pair.ids[..pair.real_len];
        let n = ids.len();
        let d = self.config.d_model;
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let positions: Vec<usize> = (0..n).collect();
        let mut x = vars["embed.token"]
            .gather(ids)?
            .add(vars["embed.position"].gather(&positions)?)?;

        for layer in 0..self.config.layers {
            let p = |suffix: &str| format!("layer{layer}.{suffix}");
            let project = |w: &str, b: &str| -> Result<Var64<'t>, RankerError> {
                Ok(x.matmul(vars[&p(w)])?
                    .add(vars[&p(b)].broadcast_rows(n)?)?)
            };
            let q = project("attn.w_q", "attn.b_q")?;
            let k = project("attn.w_k", "attn.b_k")?;
            let v = project("attn.w_v", "attn.b_v")?;

            let mut head_outputs = Vec::with_capacity(heads);
            for h in 0..heads {
                let qh = q.slice_cols(h * dh, dh)?;
                let kh = k.slice_cols(h * dh, dh)?;
                let vh = v.slice_cols(h * dh, dh)?;
                let weights = qh
                    .matmul(kh.transpose()?)?
                    .scale(scale)?
                    .softmax_rows()?;
                head_outputs.push(weights.matmul(vh)?);
            }
            let context = tape.concat(&head_outputs, 1)?;
            let attn_out = context
                .matmul(vars[&p("attn.w_o")])?
                .add(vars[&p("attn.b_o")].broadcast_rows(n)?)?;
            x = self.add_norm(vars, x, attn_out, &p("norm1.gamma"), &p("norm1.beta"), n)?;

            let ff = x
                .matmul(vars[&p("ff.w1")])?
                .add(vars[&p("ff.b1")].broadcast_rows(n)?)?
                .relu()?
                .matmul(vars[&p("ff.w2")])?
                .add(vars[&p("ff.b2")].broadcast_rows(n)?)?;
            x = self.add_norm(vars, x, ff, &p("norm2.gamma"), &p("norm2.beta"), n)?;
        }

        let cls = x.row(0)?;
        Ok(vars["head.w"].dot(cls)?.add(vars["head.b"])?)
    }

    /// Differentiable relevance probability for one tokenized pair.
    pub fn score_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        pair: &TokenizedPair,
    ) -> Result<Var64<'t>, RankerError> {
        Ok(self.logit_var(tape, vars, pair)?.sigmoid()?)
    }

    /// Relevance probability in (0, 1) for raw texts.
    pub fn score(&self, query_text: &str, doc_text: &str) -> Result<f64, RankerError> {
        let pair = tokenize_pair(&self.vocab, query_text, doc_text, self.config.max_len)?;
        self.score_pair(&pair)
    }

    /// Relevance probability for an already-tokenized pair.
    pub fn score_pair(&self, pair: &TokenizedPair) -> Result<f64, RankerError> {
        let tape = Tape64::new();
        let vars = register_params(&tape, &self.params);
        Ok(self.score_var(&tape, &vars, pair)?.item())
    }

    /// Persist as `params.json` + `vocab.txt` + `meta.json` inside `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), RankerError> {
        fs::create_dir_all(dir).map_err(|e| RankerError::io(dir, e))?;
        self.params.save(&dir.join("params.json"))?;
        self.vocab.save(&dir.join("vocab.txt"))?;
        let meta = serde_json::to_string_pretty(&self.config)
            .map_err(|e| RankerError::contract(e.to_string()))?;
        fs::write(dir.join("meta.json"), meta)
            .map_err(|e| RankerError::io(&dir.join("meta.json"), e))
    }

    pub fn load(dir: &Path) -> Result<Self, RankerError> {
        let params = ParamMap64::load(&dir.join("params.json"))?;
        let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
        let meta = fs::read_to_string(dir.join("meta.json"))
            .map_err(|e| RankerError::io(&dir.join("meta.json"), e))?;
        let config: RankerConfig =
            serde_json::from_str(&meta).map_err(|e| RankerError::contract(e.to_string()))?;
        config.validate()?;
        Ok(Ranker {
            vocab,
            config,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_ranker() -> Ranker {
        let vocab = Vocabulary::build(["alpha beta gamma delta epsilon"].into_iter(), 64);
        let config = RankerConfig {
            layers: 2,
            heads: 2,
            d_model: 8,
            d_ff: 16,
            max_len: 32,
            vocab_cap: 64,
        };
        Ranker::init(vocab, config, 3).unwrap()
    }

    #[test]
    fn score_is_in_open_unit_interval() {
        let ranker = tiny_ranker();
        let score = ranker.score("alpha beta", "gamma delta epsilon").unwrap();
        assert!(score > 0.0 && score < 1.0, "{score}");
    }

    #[test]
    fn score_is_deterministic() {
        let ranker = tiny_ranker();
        let a = ranker.score("alpha", "beta gamma").unwrap();
        let b = ranker.score("alpha", "beta gamma").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn appending_padding_never_changes_score() {
        let ranker = tiny_ranker();
        let pair = tokenize_pair(&ranker.vocab, "alpha", "beta gamma", 32).unwrap();
        let mut longer = pair.clone();
        longer.ids.extend([crate::vocab::PAD; 16]);
        longer.mask.extend([false; 16]);
        let a = ranker.score_pair(&pair).unwrap();
        let b = ranker.score_pair(&longer).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn invalid_head_split_is_rejected() {
        let vocab = Vocabulary::build(["a"].into_iter(), 16);
        let config = RankerConfig {
            heads: 3,
            d_model: 8,
            ..Default::default()
        };
        assert!(Ranker::init(vocab, config, 0).is_err());
    }

    #[test]
    fn save_load_round_trip_preserves_scores() {
        let ranker = tiny_ranker();
        let dir = tempfile::tempdir().unwrap();
        ranker.save(dir.path()).unwrap();
        let loaded = Ranker::load(dir.path()).unwrap();
        let a = ranker.score("alpha beta", "delta").unwrap();
        let b = loaded.score("alpha beta", "delta").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
