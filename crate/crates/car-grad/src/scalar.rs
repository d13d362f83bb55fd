//! Scalar abstraction for the tensor core.
//!
//! All math in this crate is generic over [`Scalar`] so the same kernels
//! serve `f32` and `f64`. Gradient checking needs the headroom of `f64`,
//! which is why the crate root exports `f64` aliases as the defaults.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point element type of tensors, tapes and optimizers.
pub trait Scalar:
    Float + Sum + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals inside generic code.
    fn from_f64(value: f64) -> Self {
        Self::from(value).expect("f64 literal representable in Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(f64::from_f64(0.5), 0.5);
        assert_eq!(f32::from_f64(0.5), 0.5f32);
    }
}
