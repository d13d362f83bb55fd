//! Gradient-descent steppers: plain SGD and Adam with bias correction.

use std::collections::BTreeMap;

use crate::error::GradError;
use crate::params::{GradMap, ParamMap};
use crate::scalar::Scalar;

/// Update rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    Sgd,
    Adam,
}

/// Optimizer state: mode, learning rate, step counter and (for Adam) the
/// per-parameter moment accumulators.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    mode: OptMode,
    learning_rate: T,
    beta1: T,
    beta2: T,
    epsilon: T,
    step_count: u64,
    first_moment: BTreeMap<String, Vec<T>>,
    second_moment: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn sgd(learning_rate: T) -> Self {
        OptimizerState {
            mode: OptMode::Sgd,
            learning_rate,
            beta1: T::zero(),
            beta2: T::zero(),
            epsilon: T::zero(),
            step_count: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    /// Adam with the usual defaults: beta1 0.9, beta2 0.999, epsilon 1e-8.
    pub fn adam(learning_rate: T) -> Self {
        OptimizerState {
            mode: OptMode::Adam,
            learning_rate,
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            epsilon: T::from_f64(1e-8),
            step_count: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> OptMode {
        self.mode
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Apply one update to every parameter in `params`. Every parameter must
    /// have a gradient entry of matching shape.
    pub fn step(&mut self, params: &mut ParamMap<T>, grads: &GradMap<T>) -> Result<(), GradError> {
        for (name, _) in params.iter() {
            if !grads.contains_key(name) {
                return Err(GradError::MissingGradient { name: name.clone() });
            }
        }
        self.step_count += 1;
        let t = self.step_count;
        for (name, tensor) in params.iter_mut() {
            let grad = &grads[name];
            if grad.shape() != tensor.shape() {
                return Err(GradError::ShapeMismatch {
                    op: "optimizer_step",
                    lhs: tensor.shape().to_vec(),
                    rhs: grad.shape().to_vec(),
                });
            }
            match self.mode {
                OptMode::Sgd => {
                    for (p, g) in tensor.values_mut().iter_mut().zip(grad.values()) {
                        *p = *p - self.learning_rate * *g;
                    }
                }
                OptMode::Adam => {
                    let n = tensor.len();
                    let m = self
                        .first_moment
                        .entry(name.clone())
                        .or_insert_with(|| vec![T::zero(); n]);
                    let v = self
                        .second_moment
                        .entry(name.clone())
                        .or_insert_with(|| vec![T::zero(); n]);
                    let one = T::one();
                    let bc1 = one - self.beta1.powi(t as i32);
                    let bc2 = one - self.beta2.powi(t as i32);
                    for i in 0..n {
                        let g = grad.values()[i];
                        m[i] = self.beta1 * m[i] + (one - self.beta1) * g;
                        v[i] = self.beta2 * v[i] + (one - self.beta2) * g * g;
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        let p = &mut tensor.values_mut()[i];
                        *p = *p - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
                    }
                }
            }
        }
        Ok(())
    }

    /// [`step`](Self::step), then drop the consumed gradients.
    pub fn step_clearing(
        &mut self,
        params: &mut ParamMap<T>,
        grads: &mut GradMap<T>,
    ) -> Result<(), GradError> {
        self.step(params, grads)?;
        grads.clear();
        Ok(())
    }
}
