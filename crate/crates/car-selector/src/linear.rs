//! Linear selection: query and passage become average token embeddings,
//! pass through one shared feed-forward layer, and are compared by dot
//! product.

use car_grad::{register_params, ParamMap64, ParamVars, Tape64, Tensor64, Var64};

use crate::encoder::SelectorVocab;
use crate::error::SelectorError;

pub const EMBEDDING: &str = "embedding";
pub const W_FF: &str = "w_ff";
pub const B_FF: &str = "b_ff";

/// Parameters of the linear selector: shared embedding table plus the
/// feed-forward layer applied to both sides.
#[derive(Debug, Clone)]
pub struct LinearSelector {
    pub vocab: SelectorVocab,
    pub params: ParamMap64,
}

impl LinearSelector {
    pub fn init(vocab: SelectorVocab, d_emb: usize, seed: u64) -> Self {
        let mut rng = car_grad::seeded_rng(seed);
        let mut params = ParamMap64::new();
        params.insert(
            EMBEDDING,
            car_grad::xavier_uniform(vocab.size(), d_emb, &mut rng),
        );
        params.insert(W_FF, car_grad::xavier_uniform(d_emb, d_emb, &mut rng));
        params.insert(B_FF, Tensor64::zeros(vec![d_emb]));
        LinearSelector { vocab, params }
    }

    pub fn d_emb(&self) -> usize {
        self.params.get(EMBEDDING).expect("embedding present").cols()
    }

    /// Average token embedding through the shared feed-forward layer.
    /// Empty sequences encode from the zero vector.
    pub fn encode_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        ids: &[usize],
    ) -> Result<Var64<'t>, SelectorError> {
        let d = self.d_emb();
        let mean = if ids.is_empty() {
            tape.constant(Tensor64::zeros(vec![d]))
        } else {
            vars[EMBEDDING].gather(ids)?.mean_axis(0)?
        };
        Ok(mean
            .reshape(vec![1, d])?
            .matmul(vars[W_FF])?
            .reshape(vec![d])?
            .add(vars[B_FF])?)
    }

    /// Differentiable score for token-id sequences.
    pub fn score_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        query_ids: &[usize],
        passage_ids: &[usize],
    ) -> Result<Var64<'t>, SelectorError> {
        let q = self.encode_var(tape, vars, query_ids)?;
        let p = self.encode_var(tape, vars, passage_ids)?;
        Ok(q.dot(p)?)
    }

    pub fn score(&self, query_text: &str, passage_text: &str) -> Result<f64, SelectorError> {
        let tape = Tape64::new();
        let vars = register_params(&tape, &self.params);
        let score = self.score_var(
            &tape,
            &vars,
            &self.vocab.token_ids(query_text),
            &self.vocab.token_ids(passage_text),
        )?;
        Ok(score.item())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn selector() -> LinearSelector {
        let vocab = SelectorVocab::build(["alpha beta gamma delta"].into_iter());
        LinearSelector::init(vocab, 8, 5)
    }

    #[test]
    fn identical_texts_score_non_negative() {
        let s = selector();
        // score(x, x) = ||FF(Enc(x))||^2 >= 0
        assert!(s.score("alpha beta", "alpha beta").unwrap() >= 0.0);
    }

    #[test]
    fn identity_ff_disjoint_one_hot_is_zero() {
        // With an identity feed-forward layer and one-hot rows, texts over
        // disjoint vocabularies have orthogonal encodings.
        let vocab = SelectorVocab::build(["aa bb"].into_iter());
        let mut selector = LinearSelector::init(vocab, 3, 1);
        let v = selector.vocab.size();
        let mut one_hot = vec![0.0; v * 3];
        for row in 0..v {
            one_hot[row * 3 + row.min(2)] = 1.0;
        }
        selector
            .params
            .insert(EMBEDDING, Tensor64::matrix(v, 3, one_hot).unwrap());
        let mut identity = vec![0.0; 9];
        for i in 0..3 {
            identity[i * 3 + i] = 1.0;
        }
        selector
            .params
            .insert(W_FF, Tensor64::matrix(3, 3, identity).unwrap());
        let score = selector.score("aa", "bb").unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn empty_text_encodes_to_zero_vector() {
        let s = selector();
        // Enc("") = FF(0) = bias = 0 at init, so the dot product is 0.
        assert_eq!(s.score("", "alpha").unwrap(), 0.0);
    }

    #[test]
    fn scoring_is_deterministic() {
        let s = selector();
        let a = s.score("alpha beta", "gamma delta").unwrap();
        let b = s.score("alpha beta", "gamma delta").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
