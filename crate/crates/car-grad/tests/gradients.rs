//! Gradient correctness of composite graphs against the central
//! finite-difference oracle, plus the determinism and isolation contracts.

use car_grad::{
    finite_difference_check, register_params, seeded_rng, xavier_uniform, GradError, ParamMap64,
    ParamVars, Tape64, Tensor64, Var64,
};
use rand::Rng;

/// Three dense layers with mixed nonlinearities, reduced to a scalar.
fn three_layer_loss<'t>(
    tape: &'t Tape64,
    vars: &ParamVars<'t, f64>,
    input: &Tensor64,
) -> Result<Var64<'t>, GradError> {
    let x = tape.constant(input.clone());
    let h1 = x.matmul(vars["w1"])?.tanh()?;
    let h2 = h1.matmul(vars["w2"])?.sigmoid()?;
    let h3 = h2.matmul(vars["w3"])?;
    let pooled = h3.max_pool_rows()?;
    let squashed = pooled.tanh()?;
    squashed.mul(squashed)?.sum()
}

fn random_params(seed: u64) -> (ParamMap64, Tensor64) {
    let mut rng = seeded_rng(seed);
    let mut params = ParamMap64::new();
    params.insert("w1", xavier_uniform(4, 5, &mut rng));
    params.insert("w2", xavier_uniform(5, 6, &mut rng));
    params.insert("w3", xavier_uniform(6, 3, &mut rng));
    let input = Tensor64::matrix(
        3,
        4,
        (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    (params, input)
}

#[test]
fn three_layer_graph_matches_finite_differences() {
    for seed in [11, 29, 83] {
        let (params, input) = random_params(seed);
        let err = finite_difference_check(
            |tape, vars| three_layer_loss(tape, vars, &input),
            &params,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn forward_and_backward_are_bit_deterministic() {
    let run = |seed: u64| -> (f64, Vec<f64>) {
        let (params, input) = random_params(seed);
        let tape = Tape64::new();
        let vars = register_params(&tape, &params);
        let loss = three_layer_loss(&tape, &vars, &input).unwrap();
        let grads = tape.backward(loss).unwrap();
        (loss.item(), grads.get(vars["w1"]).unwrap().values().to_vec())
    };
    let (l1, g1) = run(7);
    let (l2, g2) = run(7);
    assert_eq!(l1.to_bits(), l2.to_bits());
    assert_eq!(
        g1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        g2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn independent_tapes_do_not_exchange_gradients() {
    let t1 = Tape64::new();
    let t2 = Tape64::new();
    let a1 = t1.param(Tensor64::scalar(2.0));
    let a2 = t2.param(Tensor64::scalar(5.0));
    let l1 = a1.mul(a1).unwrap();
    let l2 = a2.mul(a2).unwrap();
    let g1 = t1.backward(l1).unwrap();
    let g2 = t2.backward(l2).unwrap();
    assert_eq!(g1.get(a1).unwrap().item(), 4.0);
    assert_eq!(g2.get(a2).unwrap().item(), 10.0);
    // A variable from one tape is invisible to the other's gradient table.
    assert!(g1.get_or_zeros(a1).item() == 4.0);
    assert!(matches!(
        a1.add(a2),
        Err(GradError::TapeMismatch { .. })
    ));
}

#[test]
fn values_stay_finite_through_forward_and_backward() {
    let (params, input) = random_params(3);
    let tape = Tape64::new();
    let vars = register_params(&tape, &params);
    let loss = three_layer_loss(&tape, &vars, &input).unwrap();
    assert!(loss.value().all_finite());
    let grads = tape.backward(loss).unwrap();
    for (_, var) in vars.iter() {
        assert!(grads.get_or_zeros(*var).all_finite());
    }
}

#[test]
fn generic_core_also_runs_at_f32() {
    use car_grad::{ParamMap, Tape, Tensor};
    let mut params = ParamMap::<f32>::new();
    params.insert("w", Tensor::vector(vec![0.5f32, -0.25]));
    let tape = Tape::<f32>::new();
    let vars = register_params(&tape, &params);
    let loss = vars["w"].mul(vars["w"]).unwrap().sum().unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(vars["w"]).unwrap().values(), &[1.0f32, -0.5]);
}
