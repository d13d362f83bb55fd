//! Dense tensors: flat row-major storage plus a shape.
//!
//! Tensors here are plain values. Differentiation state (parents, gradients,
//! requires-grad flags) lives on the [`crate::tape::Tape`], not on the tensor,
//! so tensors detached from any tape are immutable data and freely shareable
//! across threads.

use serde::{Deserialize, Serialize};

use crate::error::GradError;
use crate::scalar::Scalar;

/// Dense array with row-major storage. Rank 1 and 2 cover every model in
/// this workspace; shape checking is strict and nothing broadcasts
/// implicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Build a tensor, validating that `values.len()` equals the product of
    /// `shape`.
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Result<Self, GradError> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(GradError::DataLength {
                shape,
                len: values.len(),
            });
        }
        Ok(Tensor { shape, values })
    }

    /// Rank-1 tensor from a value list.
    pub fn vector(values: Vec<T>) -> Self {
        Tensor {
            shape: vec![values.len()],
            values,
        }
    }

    /// Rank-2 tensor from row-major values.
    pub fn matrix(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, GradError> {
        Tensor::new(vec![rows, cols], values)
    }

    /// Scalar tensor of shape `[1]`.
    pub fn scalar(value: T) -> Self {
        Tensor {
            shape: vec![1],
            values: vec![value],
        }
    }

    /// All-zeros tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            values: vec![T::zero(); n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of rows of a rank-2 tensor (or the length of a vector).
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Number of columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            _ => 1,
        }
    }

    /// Single value of a scalar tensor.
    pub fn item(&self) -> T {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.values[0]
    }

    /// True when every stored value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
