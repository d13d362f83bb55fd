//! Finite-difference gradient verification for both selectors, over every
//! trainable tensor (embeddings, LSTM weights, attention weights).

use car_selector::{AttentionSelector, LinearSelector, SelectorVocab};

fn vocab() -> SelectorVocab {
    SelectorVocab::build(["alpha beta gamma delta epsilon zeta"].into_iter())
}

#[test]
fn linear_selector_gradient_matches_finite_differences() {
    for seed in [1, 2, 3] {
        let selector = LinearSelector::init(vocab(), 5, seed);
        let q_ids = selector.vocab.token_ids("alpha beta");
        let p_ids = selector.vocab.token_ids("gamma delta epsilon");
        let err = car_grad::finite_difference_check(
            |tape, vars| {
                selector
                    .score_var(tape, vars, &q_ids, &p_ids)
                    .map_err(|e| match e {
                        car_selector::SelectorError::Grad(g) => g,
                        other => panic!("unexpected error: {other}"),
                    })
            },
            &selector.params,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn attention_selector_gradient_matches_finite_differences() {
    for seed in [4, 5, 6] {
        let selector = AttentionSelector::init(vocab(), 4, 3, seed);
        let q_ids = selector.vocab.token_ids("alpha beta");
        let p_ids = selector.vocab.token_ids("gamma delta epsilon zeta");
        let err = car_grad::finite_difference_check(
            |tape, vars| {
                selector
                    .score_var(tape, vars, &q_ids, &p_ids)
                    .map_err(|e| match e {
                        car_selector::SelectorError::Grad(g) => g,
                        other => panic!("unexpected error: {other}"),
                    })
            },
            &selector.params,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}
