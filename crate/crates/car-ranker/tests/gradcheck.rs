//! Finite-difference verification of the full ranker gradient through the
//! pointwise loss, on a 2-layer d_model=16 instance.

use car_ranker::{
    pointwise_loss_var, tokenize_pair, Ranker, RankerConfig, RankerError, Vocabulary,
};

#[test]
fn ranker_loss_gradient_matches_finite_differences() {
    let vocab = Vocabulary::build(["alpha beta gamma delta epsilon zeta"].into_iter(), 32);
    let config = RankerConfig {
        layers: 2,
        heads: 2,
        d_model: 16,
        d_ff: 24,
        max_len: 16,
        vocab_cap: 32,
    };
    for seed in [21, 22, 23] {
        let ranker = Ranker::init(vocab.clone(), config, seed).unwrap();
        let pairs = [
            tokenize_pair(&vocab, "alpha beta", "gamma delta epsilon", 16).unwrap(),
            tokenize_pair(&vocab, "zeta", "alpha zeta beta", 16).unwrap(),
        ];
        let labels = [1u8, 0];
        let err = car_grad::finite_difference_check(
            |tape, vars| {
                let mut predictions = Vec::new();
                for pair in &pairs {
                    let p = ranker.score_var(tape, vars, pair).map_err(unwrap_grad)?;
                    predictions.push(p);
                }
                let stacked = tape.concat(&predictions, 0)?;
                pointwise_loss_var(tape, stacked, &labels).map_err(unwrap_grad)
            },
            &ranker.params,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

fn unwrap_grad(e: RankerError) -> car_grad::GradError {
    match e {
        RankerError::Grad(g) => g,
        other => panic!("unexpected error: {other}"),
    }
}
