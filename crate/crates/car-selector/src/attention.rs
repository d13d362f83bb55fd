//! Attention selection with a shared bidirectional LSTM.
//!
//! Query and passage token embeddings run through the same Bi-LSTM. The
//! query representation is the elementwise max-pool of its hidden states.
//! Each passage position gets an attention energy from a learned bilinear
//! form against the query vector; positions are rescaled by the
//! exponentiated energy, max-pooled, and compared to the query by cosine
//! similarity, giving a score in [-1, 1].

use car_grad::{register_params, ParamMap64, ParamVars, Tape64, Tensor64, Var64};

use crate::encoder::SelectorVocab;
use crate::error::SelectorError;

pub const EMBEDDING: &str = "embedding";
pub const ATT_W1: &str = "att.w1";
pub const ATT_W2: &str = "att.w2";
pub const ATT_W3: &str = "att.w3";

/// Gate order inside the packed LSTM matrices: input, forget, output, cell.
fn lstm_names(direction: &str) -> (String, String, String) {
    (
        format!("lstm.{direction}.w_input"),
        format!("lstm.{direction}.w_recur"),
        format!("lstm.{direction}.bias"),
    )
}

#[derive(Debug, Clone)]
pub struct AttentionSelector {
    pub vocab: SelectorVocab,
    pub params: ParamMap64,
}

impl AttentionSelector {
    pub fn init(vocab: SelectorVocab, d_emb: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = car_grad::seeded_rng(seed);
        let mut params = ParamMap64::new();
        params.insert(
            EMBEDDING,
            car_grad::xavier_uniform(vocab.size(), d_emb, &mut rng),
        );
        for direction in ["fwd", "bwd"] {
            let (w_in, w_rec, bias) = lstm_names(direction);
            params.insert(w_in, car_grad::xavier_uniform(d_emb, 4 * hidden, &mut rng));
            params.insert(w_rec, car_grad::xavier_uniform(hidden, 4 * hidden, &mut rng));
            params.insert(bias, Tensor64::zeros(vec![4 * hidden]));
        }
        let width = 2 * hidden;
        params.insert(ATT_W1, car_grad::xavier_uniform(width, width, &mut rng));
        params.insert(ATT_W2, car_grad::xavier_uniform(width, width, &mut rng));
        params.insert(
            ATT_W3,
            Tensor64::vector(car_grad::xavier_uniform(1, width, &mut rng).values().to_vec()),
        );
        AttentionSelector { vocab, params }
    }

    pub fn d_emb(&self) -> usize {
        self.params.get(EMBEDDING).expect("embedding present").cols()
    }

    pub fn hidden(&self) -> usize {
        self.params
            .get("lstm.fwd.bias")
            .expect("lstm bias present")
            .len()
            / 4
    }

    /// One LSTM direction over the embedded sequence; returns hidden states
    /// stacked as rows `(len, hidden)`.
    fn lstm_pass<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        embedded: Var64<'t>,
        len: usize,
        direction: &str,
    ) -> Result<Vec<Var64<'t>>, SelectorError> {
        let hidden = self.hidden();
        let (w_in, w_rec, bias) = lstm_names(direction);
        let w_in = vars[&w_in];
        let w_rec = vars[&w_rec];
        let bias = vars[&bias];

        let mut h = tape.constant(Tensor64::zeros(vec![hidden]));
        let mut c = tape.constant(Tensor64::zeros(vec![hidden]));
        let order: Vec<usize> = if direction == "fwd" {
            (0..len).collect()
        } else {
            (0..len).rev().collect()
        };
        let mut states: Vec<Option<Var64<'t>>> = vec![None; len];
        for t in order {
            let x = embedded.row(t)?.reshape(vec![1, self.d_emb()])?;
            let z = x
                .matmul(w_in)?
                .add(h.reshape(vec![1, hidden])?.matmul(w_rec)?)?
                .reshape(vec![4 * hidden])?
                .add(bias)?;
            let input_gate = z.slice(0, hidden)?.sigmoid()?;
            let forget_gate = z.slice(hidden, hidden)?.sigmoid()?;
            let output_gate = z.slice(2 * hidden, hidden)?.sigmoid()?;
            let cell_update = z.slice(3 * hidden, hidden)?.tanh()?;
            c = forget_gate.mul(c)?.add(input_gate.mul(cell_update)?)?;
            h = output_gate.mul(c.tanh()?)?;
            states[t] = Some(h);
        }
        Ok(states.into_iter().map(|s| s.expect("all steps visited")).collect())
    }

    /// Shared Bi-LSTM contextualization: `(len, 2 * hidden)` matrix.
    fn bilstm<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        ids: &[usize],
    ) -> Result<Var64<'t>, SelectorError> {
        let embedded = vars[EMBEDDING].gather(ids)?;
        let fwd = self.lstm_pass(tape, vars, embedded, ids.len(), "fwd")?;
        let bwd = self.lstm_pass(tape, vars, embedded, ids.len(), "bwd")?;
        let rows: Vec<Var64<'t>> = fwd
            .into_iter()
            .zip(bwd)
            .map(|(f, b)| tape.concat(&[f, b], 0))
            .collect::<Result<_, _>>()?;
        Ok(tape.stack_rows(&rows)?)
    }

    /// Max-pooled Bi-LSTM representation of the query.
    pub fn query_rep_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        query_ids: &[usize],
    ) -> Result<Var64<'t>, SelectorError> {
        if query_ids.is_empty() {
            return Err(SelectorError::contract(
                "attention scoring requires at least one query token",
            ));
        }
        Ok(self.bilstm(tape, vars, query_ids)?.max_pool_rows()?)
    }

    /// Score one passage against a prepared query representation; also
    /// returns the contextualized and attention-scaled passage matrices.
    pub fn passage_score_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        query_vec: Var64<'t>,
        passage_ids: &[usize],
    ) -> Result<(Var64<'t>, Var64<'t>, Var64<'t>), SelectorError> {
        if passage_ids.is_empty() {
            return Err(SelectorError::contract(
                "attention scoring requires at least one passage token",
            ));
        }
        let width = 2 * self.hidden();
        let passage_states = self.bilstm(tape, vars, passage_ids)?;
        let query_proj = query_vec.reshape(vec![1, width])?.matmul(vars[ATT_W2])?;
        let mut scaled_rows = Vec::with_capacity(passage_ids.len());
        for i in 0..passage_ids.len() {
            let position = passage_states.row(i)?;
            let mixed = position
                .reshape(vec![1, width])?
                .matmul(vars[ATT_W1])?
                .add(query_proj)?
                .reshape(vec![width])?;
            let energy = vars[ATT_W3].dot(mixed.tanh()?)?;
            scaled_rows.push(position.mul_scalar(energy.exp()?)?);
        }
        let scaled = tape.stack_rows(&scaled_rows)?;
        let passage_vec = scaled.max_pool_rows()?;
        let score = query_vec.cosine(passage_vec)?;
        Ok((score, passage_states, scaled))
    }

    /// Differentiable score plus the contextualized and attention-scaled
    /// passage matrices (exposed for inspection).
    pub fn score_trace_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        query_ids: &[usize],
        passage_ids: &[usize],
    ) -> Result<(Var64<'t>, Var64<'t>, Var64<'t>), SelectorError> {
        let query_vec = self.query_rep_var(tape, vars, query_ids)?;
        self.passage_score_var(tape, vars, query_vec, passage_ids)
    }

    pub fn score_var<'t>(
        &self,
        tape: &'t Tape64,
        vars: &ParamVars<'t, f64>,
        query_ids: &[usize],
        passage_ids: &[usize],
    ) -> Result<Var64<'t>, SelectorError> {
        Ok(self
            .score_trace_var(tape, vars, query_ids, passage_ids)?
            .0)
    }

    /// Score token sequences with explicit real lengths: ids at positions
    /// `>= len` are masked out of the recurrence and both max-pools.
    pub fn score_masked(
        &self,
        query_ids: &[usize],
        query_len: usize,
        passage_ids: &[usize],
        passage_len: usize,
    ) -> Result<f64, SelectorError> {
        let q = &query_ids[..query_len.min(query_ids.len())];
        let p = &passage_ids[..passage_len.min(passage_ids.len())];
        let tape = Tape64::new();
        let vars = register_params(&tape, &self.params);
        Ok(self.score_var(&tape, &vars, q, p)?.item())
    }

    pub fn score(&self, query_text: &str, passage_text: &str) -> Result<f64, SelectorError> {
        let q = self.vocab.token_ids(query_text);
        let p = self.vocab.token_ids(passage_text);
        self.score_masked(&q, q.len(), &p, p.len())
    }

    /// Contextualized and attention-scaled passage rows for one pair, as
    /// plain tensors (diagnostics).
    pub fn attention_outputs(
        &self,
        query_text: &str,
        passage_text: &str,
    ) -> Result<(Tensor64, Tensor64), SelectorError> {
        let tape = Tape64::new();
        let vars = register_params(&tape, &self.params);
        let (_, states, scaled) = self.score_trace_var(
            &tape,
            &vars,
            &self.vocab.token_ids(query_text),
            &self.vocab.token_ids(passage_text),
        )?;
        Ok((states.value(), scaled.value()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn selector() -> AttentionSelector {
        let vocab = SelectorVocab::build(["alpha beta gamma delta epsilon"].into_iter());
        AttentionSelector::init(vocab, 4, 3, 11)
    }

    #[test]
    fn score_is_within_cosine_range() {
        let s = selector();
        let score = s.score("alpha beta", "gamma delta epsilon").unwrap();
        assert!((-1.0..=1.0).contains(&score), "{score}");
    }

    #[test]
    fn score_is_deterministic() {
        let s = selector();
        let a = s.score("alpha beta", "gamma delta").unwrap();
        let b = s.score("alpha beta", "gamma delta").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_side_is_contract_error() {
        let s = selector();
        assert!(matches!(
            s.score("", "gamma"),
            Err(SelectorError::Contract(_))
        ));
        assert!(matches!(
            s.score("alpha", ""),
            Err(SelectorError::Contract(_))
        ));
    }

    #[test]
    fn masked_padding_does_not_change_score() {
        let s = selector();
        let q = s.vocab.token_ids("alpha beta");
        let p = s.vocab.token_ids("gamma delta");
        let base = s.score_masked(&q, q.len(), &p, p.len()).unwrap();
        let mut q_padded = q.clone();
        let mut p_padded = p.clone();
        q_padded.extend([0, 0, 0]);
        p_padded.extend([0, 0]);
        let padded = s
            .score_masked(&q_padded, q.len(), &p_padded, p.len())
            .unwrap();
        assert_eq!(base.to_bits(), padded.to_bits());
    }

    #[test]
    fn attention_scaling_is_positive_per_position() {
        // Each scaled row must be a positive multiple of its hidden row.
        let s = selector();
        let (states, scaled) = s
            .attention_outputs("alpha beta", "gamma delta epsilon")
            .unwrap();
        let width = states.cols();
        for i in 0..states.rows() {
            let mut ratio: Option<f64> = None;
            for j in 0..width {
                let h = states.values()[i * width + j];
                let sc = scaled.values()[i * width + j];
                if h.abs() > 1e-12 {
                    let r = sc / h;
                    assert!(r > 0.0, "row {i}: non-positive scale {r}");
                    if let Some(prev) = ratio {
                        assert!(
                            (prev - r).abs() < 1e-9 * prev.abs().max(1.0),
                            "row {i}: ratio varies ({prev} vs {r})"
                        );
                    }
                    ratio = Some(r);
                } else {
                    assert!(sc.abs() < 1e-12);
                }
            }
        }
    }
}
