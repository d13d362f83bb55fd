//! Named parameter collections, seeded initialization and the shared
//! JSON on-disk format (`name -> { shape, values }`) used by every model
//! in the workspace.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GradError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gradients keyed by parameter name, as consumed by the optimizer.
pub type GradMap<T> = BTreeMap<String, Tensor<T>>;

/// Ordered map of named parameter tensors. `BTreeMap` keeps serialization
/// and optimizer iteration deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMap<T> {
    tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> Default for ParamMap<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamMap<T> {
    pub fn new() -> Self {
        ParamMap {
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>, GradError> {
        self.tensors
            .get(name)
            .ok_or_else(|| GradError::ParamStore(format!("missing parameter '{name}'")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>, GradError> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| GradError::ParamStore(format!("missing parameter '{name}'")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar coordinates across all tensors.
    pub fn coordinate_count(&self) -> usize {
        self.tensors.values().map(|t| t.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor<T>)> {
        self.tensors.iter_mut()
    }

    /// Canonical JSON rendering (sorted keys, stable float formatting).
    pub fn to_json(&self) -> Result<String, GradError> {
        serde_json::to_string_pretty(&self.tensors)
            .map_err(|e| GradError::ParamStore(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, GradError> {
        let tensors: BTreeMap<String, Tensor<T>> =
            serde_json::from_str(text).map_err(|e| GradError::ParamStore(e.to_string()))?;
        for (name, t) in &tensors {
            let expected: usize = t.shape().iter().product();
            if t.len() != expected {
                return Err(GradError::ParamStore(format!(
                    "parameter '{name}' has {} values for shape {:?}",
                    t.len(),
                    t.shape()
                )));
            }
        }
        Ok(ParamMap { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<(), GradError> {
        fs::write(path, self.to_json()?).map_err(|e| GradError::ParamStore(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GradError> {
        let text = fs::read_to_string(path).map_err(|e| {
            GradError::ParamStore(format!("{}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }
}

/// Deterministic generator used for every stochastic choice in the
/// workspace (initialization, shuffling, sampling).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Xavier-uniform matrix: entries uniform in `[-a, a]`,
/// `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| T::from_f64(rng.gen_range(-a..a)))
        .collect();
    Tensor::new(vec![rows, cols], values).expect("shape consistent by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let mut params = ParamMap::<f64>::new();
        params.insert("w", Tensor::matrix(2, 2, vec![0.1, -0.25, 1.0 / 3.0, 4.0]).unwrap());
        params.insert("b", Tensor::vector(vec![0.0, 1e-12]));
        let text = params.to_json().unwrap();
        let back = ParamMap::<f64>::from_json(&text).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn rejects_inconsistent_shape() {
        let text = r#"{"w": {"shape": [2, 2], "values": [1.0, 2.0]}}"#;
        assert!(ParamMap::<f64>::from_json(text).is_err());
    }

    #[test]
    fn xavier_is_seed_deterministic_and_bounded() {
        let a = xavier_uniform::<f64>(8, 8, &mut seeded_rng(7));
        let b = xavier_uniform::<f64>(8, 8, &mut seeded_rng(7));
        assert_eq!(a, b);
        let bound = (6.0f64 / 16.0).sqrt();
        assert!(a.values().iter().all(|v| v.abs() <= bound));
    }
}
