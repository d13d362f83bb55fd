use thiserror::Error;

/// Errors raised by tensor construction, tape operations and optimizers.
#[derive(Debug, Error)]
pub enum GradError {
    /// Operand shapes incompatible for the named operation.
    #[error("shape mismatch in {op}: left {lhs:?}, right {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Single-operand shape violation (wrong rank, empty axis, bad slice).
    #[error("invalid shape for {op}: {shape:?} ({detail})")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        detail: String,
    },

    /// Value count does not match the product of the shape dimensions.
    #[error("tensor data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },

    /// `backward` called on a non-scalar output.
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    /// Variables from two different tapes combined in one operation.
    #[error("operation {op} mixes variables from different tapes")]
    TapeMismatch { op: &'static str },

    /// Input outside the operation's domain (e.g. ln of a non-positive value).
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Optimizer asked to step a parameter with no gradient.
    #[error("missing gradient for parameter '{name}'")]
    MissingGradient { name: String },

    /// Parameter file malformed or inconsistent.
    #[error("parameter store error: {0}")]
    ParamStore(String),
}
