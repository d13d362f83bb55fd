//! Central finite-difference gradient checking.
//!
//! The independent oracle behind every gradient assertion in the workspace:
//! a model exposes its loss as a closure over tape-registered parameters,
//! and the check compares the tape's analytic gradient against central
//! differences coordinate by coordinate.

use std::collections::BTreeMap;

use crate::error::GradError;
use crate::params::ParamMap;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

/// Parameters registered on a tape, keyed by their `ParamMap` names.
pub type ParamVars<'t, T> = BTreeMap<String, Var<'t, T>>;

/// Register every tensor of `params` on `tape` as a differentiable leaf.
pub fn register_params<'t, T: Scalar>(
    tape: &'t Tape<T>,
    params: &ParamMap<T>,
) -> ParamVars<'t, T> {
    params
        .iter()
        .map(|(name, tensor)| (name.clone(), tape.param(tensor.clone())))
        .collect()
}

/// Compare analytic gradients of a deterministic scalar function against
/// central finite differences with perturbation `eps`.
///
/// Returns the maximum over all parameter coordinates of
/// `|analytic - numeric| / max(1, |analytic|)`.
pub fn finite_difference_check<T, F>(
    f: F,
    params: &ParamMap<T>,
    eps: T,
) -> Result<T, GradError>
where
    T: Scalar,
    F: for<'t> Fn(&'t Tape<T>, &ParamVars<'t, T>) -> Result<Var<'t, T>, GradError>,
{
    if eps <= T::zero() {
        return Err(GradError::Domain {
            op: "finite_difference_check",
            detail: "eps must be positive".into(),
        });
    }

    // Analytic pass.
    let analytic: BTreeMap<String, Vec<T>> = {
        let tape = Tape::new();
        let vars = register_params(&tape, params);
        let loss = f(&tape, &vars)?;
        let grads = tape.backward(loss)?;
        vars.iter()
            .map(|(name, var)| (name.clone(), grads.get_or_zeros(*var).values().to_vec()))
            .collect()
    };

    let eval = |perturbed: &ParamMap<T>| -> Result<T, GradError> {
        let tape = Tape::new();
        let vars = register_params(&tape, perturbed);
        Ok(f(&tape, &vars)?.item())
    };

    let two = T::from_f64(2.0);
    let mut max_err = T::zero();
    let mut work = params.clone();
    for (name, base) in params.iter() {
        for i in 0..base.len() {
            let orig = base.values()[i];
            work.get_mut(name)?.values_mut()[i] = orig + eps;
            let plus = eval(&work)?;
            work.get_mut(name)?.values_mut()[i] = orig - eps;
            let minus = eval(&work)?;
            work.get_mut(name)?.values_mut()[i] = orig;

            let numeric = (plus - minus) / (two * eps);
            let a = analytic[name][i];
            let err = (a - numeric).abs() / T::one().max(a.abs());
            if err > max_err {
                max_err = err;
            }
        }
    }
    Ok(max_err)
}
