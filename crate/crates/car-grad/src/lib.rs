//! Reverse-mode autodiff tensor core for the desk-scale rankers and
//! selectors in this workspace.
//!
//! The pieces: [`Tensor`] (flat row-major values plus shape), [`Tape`]
//! (operation recording and the backward pass), [`OptimizerState`]
//! (SGD/Adam), [`ParamMap`] (named parameters with a shared JSON format)
//! and [`finite_difference_check`] (the gradient oracle the test suites
//! are built on).
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64` via num-traits);
//! the `*64` aliases below are the concrete types the rest of the
//! workspace uses. Gradient checks rely on `f64` headroom.

pub mod error;
pub mod fd;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use error::GradError;
pub use fd::{finite_difference_check, register_params, ParamVars};
pub use optim::{OptMode, OptimizerState};
pub use params::{seeded_rng, xavier_uniform, GradMap, ParamMap};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

/// Concrete aliases used across the workspace.
pub type Tensor64 = Tensor<f64>;
pub type Tape64 = Tape<f64>;
pub type Var64<'t> = Var<'t, f64>;
pub type Gradients64 = Gradients<f64>;
pub type ParamMap64 = ParamMap<f64>;
pub type GradMap64 = GradMap<f64>;
pub type OptimizerState64 = OptimizerState<f64>;
