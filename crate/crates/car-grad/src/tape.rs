//! Reverse-mode differentiation over a recording tape.
//!
//! A [`Tape`] owns every intermediate tensor of one forward pass. Operations
//! on [`Var`] handles validate shapes, compute the forward value eagerly and
//! record the primitive together with its parents. [`Tape::backward`] replays
//! the record in reverse, accumulating vector-Jacobian products into a
//! [`Gradients`] table.
//!
//! One tape is single-threaded by construction (`RefCell` inside); fresh
//! tapes are cheap, so each forward/backward cycle of a training loop builds
//! its own.

use std::cell::RefCell;

use crate::error::GradError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Recorded primitive. Payloads carry whatever the backward rule needs
/// beyond the parent and output values.
#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,
    MulScalar,
    AffineConst { mul: T },
    Clamp { lo: T, hi: T },
    Tanh,
    Sigmoid,
    Exp,
    Ln,
    Relu,
    Dot,
    CosineSim,
    Sum,
    MeanAxis { axis: usize },
    MaxPoolRows { argmax: Vec<usize> },
    SoftmaxRows,
    LayerNormRows { eps: T },
    BroadcastRows,
    Concat { axis: usize },
    StackRows,
    Row { index: usize },
    Slice { start: usize },
    SliceCols { start: usize, len: usize },
    Reshape,
    Gather { indices: Vec<usize> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    parents: Vec<usize>,
    requires_grad: bool,
}

/// Recording tape for one differentiable computation.
pub struct Tape<T: Scalar> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a tensor recorded on a tape. Copyable; all arithmetic goes
/// through methods that push new nodes onto the owning tape.
#[derive(Clone, Copy)]
pub struct Var<'t, T: Scalar> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Scalar> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

/// Per-node gradients produced by [`Tape::backward`]. Entries are `None` for
/// nodes the loss does not reach.
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss w.r.t. `var`, if gradient flowed to it.
    pub fn get(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        self.grads.get(var.id).and_then(|g| g.as_ref())
    }

    /// Gradient of `var`, substituting zeros when no gradient flowed.
    pub fn get_or_zeros(&self, var: Var<'_, T>) -> Tensor<T> {
        match self.get(var) {
            Some(g) => g.clone(),
            None => Tensor::zeros(var.shape()),
        }
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Number of recorded nodes (leaves included).
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record a leaf that does not need a gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, vec![], false)
    }

    /// Record a leaf parameter participating in differentiation.
    pub fn param(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, vec![], true)
    }

    fn push(
        &self,
        value: Tensor<T>,
        op: Op<T>,
        parents: Vec<usize>,
        requires_grad: bool,
    ) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value,
            op,
            parents,
            requires_grad,
        });
        Var { tape: self, id }
    }

    fn same_tape(&self, other: &Tape<T>, op: &'static str) -> Result<(), GradError> {
        if std::ptr::eq(self, other) {
            Ok(())
        } else {
            Err(GradError::TapeMismatch { op })
        }
    }

    /// Concatenate tensors along `axis` (0 = values/rows, 1 = columns).
    pub fn concat<'t>(&'t self, parts: &[Var<'t, T>], axis: usize) -> Result<Var<'t, T>, GradError> {
        if parts.is_empty() {
            return Err(GradError::InvalidShape {
                op: "concat",
                shape: vec![],
                detail: "no operands".into(),
            });
        }
        for p in parts {
            self.same_tape(p.tape, "concat")?;
        }
        let value = {
            let nodes = self.nodes.borrow();
            let tensors: Vec<&Tensor<T>> = parts.iter().map(|p| &nodes[p.id].value).collect();
            concat_forward(&tensors, axis)?
        };
        let requires = {
            let nodes = self.nodes.borrow();
            parts.iter().any(|p| nodes[p.id].requires_grad)
        };
        Ok(self.push(
            value,
            Op::Concat { axis },
            parts.iter().map(|p| p.id).collect(),
            requires,
        ))
    }

    /// Stack rank-1 tensors of equal length into a matrix, one per row.
    pub fn stack_rows<'t>(&'t self, rows: &[Var<'t, T>]) -> Result<Var<'t, T>, GradError> {
        if rows.is_empty() {
            return Err(GradError::InvalidShape {
                op: "stack_rows",
                shape: vec![],
                detail: "no operands".into(),
            });
        }
        for r in rows {
            self.same_tape(r.tape, "stack_rows")?;
        }
        let value = {
            let nodes = self.nodes.borrow();
            let width = nodes[rows[0].id].value.len();
            let mut out = Vec::with_capacity(rows.len() * width);
            for r in rows {
                let t = &nodes[r.id].value;
                if t.shape().len() != 1 || t.len() != width {
                    return Err(GradError::ShapeMismatch {
                        op: "stack_rows",
                        lhs: vec![width],
                        rhs: t.shape().to_vec(),
                    });
                }
                out.extend_from_slice(t.values());
            }
            Tensor::new(vec![rows.len(), width], out)?
        };
        let requires = {
            let nodes = self.nodes.borrow();
            rows.iter().any(|r| nodes[r.id].requires_grad)
        };
        Ok(self.push(
            value,
            Op::StackRows,
            rows.iter().map(|r| r.id).collect(),
            requires,
        ))
    }

    /// Reverse pass from a scalar loss. Returns the per-node gradient table.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>, GradError> {
        self.same_tape(loss.tape, "backward")?;
        let nodes = self.nodes.borrow();
        let loss_node = &nodes[loss.id];
        if loss_node.value.len() != 1 {
            return Err(GradError::NonScalarLoss {
                shape: loss_node.value.shape().to_vec(),
            });
        }

        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::scalar(T::one()));

        for id in (0..=loss.id).rev() {
            if grads[id].is_none() || !nodes[id].requires_grad {
                continue;
            }
            if matches!(nodes[id].op, Op::Leaf) {
                continue;
            }
            let upstream = grads[id].take().expect("checked above");
            let node = &nodes[id];
            let parent_grads = backward_op(node, &nodes, &upstream);
            grads[id] = Some(upstream);
            for (parent, grad) in node.parents.iter().zip(parent_grads) {
                let Some(grad) = grad else { continue };
                if !nodes[*parent].requires_grad {
                    continue;
                }
                match &mut grads[*parent] {
                    Some(existing) => {
                        for (e, g) in existing.values_mut().iter_mut().zip(grad.values()) {
                            *e = *e + *g;
                        }
                    }
                    slot @ None => *slot = Some(grad),
                }
            }
        }
        Ok(Gradients { grads })
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    /// Clone of the recorded value.
    pub fn value(&self) -> Tensor<T> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    /// Value of a scalar-shaped variable.
    pub fn item(&self) -> T {
        self.tape.nodes.borrow()[self.id].value.item()
    }

    fn unary(
        self,
        op: Op<T>,
        f: impl FnOnce(&Tensor<T>) -> Result<Tensor<T>, GradError>,
    ) -> Result<Var<'t, T>, GradError> {
        let (value, requires) = {
            let nodes = self.tape.nodes.borrow();
            let node = &nodes[self.id];
            (f(&node.value)?, node.requires_grad)
        };
        Ok(self.tape.push(value, op, vec![self.id], requires))
    }

    fn binary(
        self,
        rhs: Var<'t, T>,
        op: Op<T>,
        name: &'static str,
        f: impl FnOnce(&Tensor<T>, &Tensor<T>) -> Result<Tensor<T>, GradError>,
    ) -> Result<Var<'t, T>, GradError> {
        self.tape.same_tape(rhs.tape, name)?;
        let (value, requires) = {
            let nodes = self.tape.nodes.borrow();
            let a = &nodes[self.id];
            let b = &nodes[rhs.id];
            (f(&a.value, &b.value)?, a.requires_grad || b.requires_grad)
        };
        Ok(self
            .tape
            .push(value, op, vec![self.id, rhs.id], requires))
    }

    /// Matrix product of rank-2 operands, `(m,k) x (k,n) -> (m,n)`.
    pub fn matmul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::MatMul, "matmul", matmul_forward)
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Transpose, |x| {
            require_rank(x, 2, "transpose")?;
            let (r, c) = (x.rows(), x.cols());
            let mut out = vec![T::zero(); r * c];
            for i in 0..r {
                for j in 0..c {
                    out[j * r + i] = x.values()[i * c + j];
                }
            }
            Tensor::new(vec![c, r], out)
        })
    }

    pub fn add(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::Add, "add", |a, b| {
            elementwise(a, b, "add", |x, y| x + y)
        })
    }

    pub fn sub(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::Sub, "sub", |a, b| {
            elementwise(a, b, "sub", |x, y| x - y)
        })
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::Mul, "mul", |a, b| {
            elementwise(a, b, "mul", |x, y| x * y)
        })
    }

    /// Multiply every element by a scalar-shaped variable.
    pub fn mul_scalar(self, scalar: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs_scalar_check(scalar)?, Op::MulScalar, "mul_scalar", |x, s| {
            let k = s.item();
            Ok(Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| *v * k).collect(),
            )?)
        })
    }

    /// `mul * x + add` with compile-time constants (covers negate and shift).
    pub fn affine(self, mul: T, add: T) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::AffineConst { mul }, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| *v * mul + add).collect(),
            )
        })
    }

    pub fn neg(self) -> Result<Var<'t, T>, GradError> {
        self.affine(-T::one(), T::zero())
    }

    pub fn scale(self, k: T) -> Result<Var<'t, T>, GradError> {
        self.affine(k, T::zero())
    }

    /// Clamp values into `[lo, hi]`; gradient passes only strictly inside.
    pub fn clamp(self, lo: T, hi: T) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Clamp { lo, hi }, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values()
                    .iter()
                    .map(|v| if *v < lo { lo } else if *v > hi { hi } else { *v })
                    .collect(),
            )
        })
    }

    pub fn tanh(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Tanh, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| v.tanh()).collect(),
            )
        })
    }

    pub fn sigmoid(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Sigmoid, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| sigmoid(*v)).collect(),
            )
        })
    }

    pub fn exp(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Exp, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| v.exp()).collect(),
            )
        })
    }

    /// Natural log; errors on non-positive inputs.
    pub fn ln(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Ln, |x| {
            if x.values().iter().any(|v| *v <= T::zero()) {
                return Err(GradError::Domain {
                    op: "ln",
                    detail: "non-positive input".into(),
                });
            }
            Tensor::new(
                x.shape().to_vec(),
                x.values().iter().map(|v| v.ln()).collect(),
            )
        })
    }

    pub fn relu(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Relu, |x| {
            Tensor::new(
                x.shape().to_vec(),
                x.values()
                    .iter()
                    .map(|v| if *v > T::zero() { *v } else { T::zero() })
                    .collect(),
            )
        })
    }

    /// Dot product of two equal-length vectors, shape `[1]` result.
    pub fn dot(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::Dot, "dot", |a, b| {
            require_rank(a, 1, "dot")?;
            if a.shape() != b.shape() {
                return Err(GradError::ShapeMismatch {
                    op: "dot",
                    lhs: a.shape().to_vec(),
                    rhs: b.shape().to_vec(),
                });
            }
            let s = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| *x * *y)
                .sum();
            Ok(Tensor::scalar(s))
        })
    }

    /// Cosine similarity of two vectors; errors on a zero-norm operand.
    pub fn cosine(self, rhs: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        self.binary(rhs, Op::CosineSim, "cosine", |a, b| {
            require_rank(a, 1, "cosine")?;
            if a.shape() != b.shape() {
                return Err(GradError::ShapeMismatch {
                    op: "cosine",
                    lhs: a.shape().to_vec(),
                    rhs: b.shape().to_vec(),
                });
            }
            let na = norm(a.values());
            let nb = norm(b.values());
            if na == T::zero() || nb == T::zero() {
                return Err(GradError::Domain {
                    op: "cosine",
                    detail: "zero-norm operand".into(),
                });
            }
            let dot: T = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| *x * *y)
                .sum();
            Ok(Tensor::scalar(dot / (na * nb)))
        })
    }

    /// Sum of all elements, shape `[1]`.
    pub fn sum(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Sum, |x| {
            Ok(Tensor::scalar(x.values().iter().copied().sum()))
        })
    }

    /// Mean along `axis`. Rank 1 supports axis 0 (scalar result); rank 2
    /// reduces rows (axis 0) or columns (axis 1).
    pub fn mean_axis(self, axis: usize) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::MeanAxis { axis }, |x| mean_axis_forward(x, axis))
    }

    /// Elementwise max over the row (sequence) axis of a matrix.
    pub fn max_pool_rows(self) -> Result<Var<'t, T>, GradError> {
        let (value, argmax, requires) = {
            let nodes = self.tape.nodes.borrow();
            let node = &nodes[self.id];
            let x = &node.value;
            require_rank(x, 2, "max_pool_rows")?;
            if x.rows() == 0 {
                return Err(GradError::InvalidShape {
                    op: "max_pool_rows",
                    shape: x.shape().to_vec(),
                    detail: "empty sequence axis".into(),
                });
            }
            let (r, c) = (x.rows(), x.cols());
            let mut out = x.values()[..c].to_vec();
            let mut argmax = vec![0usize; c];
            for i in 1..r {
                for j in 0..c {
                    let v = x.values()[i * c + j];
                    if v > out[j] {
                        out[j] = v;
                        argmax[j] = i;
                    }
                }
            }
            (Tensor::vector(out), argmax, node.requires_grad)
        };
        Ok(self
            .tape
            .push(value, Op::MaxPoolRows { argmax }, vec![self.id], requires))
    }

    /// Numerically stable softmax over each row of a matrix.
    pub fn softmax_rows(self) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::SoftmaxRows, |x| {
            require_rank(x, 2, "softmax_rows")?;
            let (r, c) = (x.rows(), x.cols());
            if c == 0 {
                return Err(GradError::InvalidShape {
                    op: "softmax_rows",
                    shape: x.shape().to_vec(),
                    detail: "empty rows".into(),
                });
            }
            let mut out = vec![T::zero(); r * c];
            for i in 0..r {
                let row = &x.values()[i * c..(i + 1) * c];
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let mut denom = T::zero();
                for j in 0..c {
                    let e = (row[j] - max).exp();
                    out[i * c + j] = e;
                    denom = denom + e;
                }
                for j in 0..c {
                    out[i * c + j] = out[i * c + j] / denom;
                }
            }
            Tensor::new(vec![r, c], out)
        })
    }

    /// Per-row standardization `(x - mean) / sqrt(var + eps)` of a matrix.
    pub fn layer_norm_rows(self, eps: T) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::LayerNormRows { eps }, |x| {
            require_rank(x, 2, "layer_norm_rows")?;
            let (r, c) = (x.rows(), x.cols());
            let n = T::from_f64(c as f64);
            let mut out = vec![T::zero(); r * c];
            for i in 0..r {
                let row = &x.values()[i * c..(i + 1) * c];
                let mean = row.iter().copied().sum::<T>() / n;
                let var = row
                    .iter()
                    .map(|v| (*v - mean) * (*v - mean))
                    .sum::<T>()
                    / n;
                let denom = (var + eps).sqrt();
                for j in 0..c {
                    out[i * c + j] = (row[j] - mean) / denom;
                }
            }
            Tensor::new(vec![r, c], out)
        })
    }

    /// Repeat a vector as `rows` identical matrix rows.
    pub fn broadcast_rows(self, rows: usize) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::BroadcastRows, |x| {
            require_rank(x, 1, "broadcast_rows")?;
            let c = x.len();
            let mut out = Vec::with_capacity(rows * c);
            for _ in 0..rows {
                out.extend_from_slice(x.values());
            }
            Tensor::new(vec![rows, c], out)
        })
    }

    /// Extract one row of a matrix as a vector.
    pub fn row(self, index: usize) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Row { index }, |x| {
            require_rank(x, 2, "row")?;
            if index >= x.rows() {
                return Err(GradError::InvalidShape {
                    op: "row",
                    shape: x.shape().to_vec(),
                    detail: format!("row index {index} out of bounds"),
                });
            }
            let c = x.cols();
            Ok(Tensor::vector(
                x.values()[index * c..(index + 1) * c].to_vec(),
            ))
        })
    }

    /// Contiguous slice of a vector.
    pub fn slice(self, start: usize, len: usize) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Slice { start }, |x| {
            require_rank(x, 1, "slice")?;
            if start + len > x.len() {
                return Err(GradError::InvalidShape {
                    op: "slice",
                    shape: x.shape().to_vec(),
                    detail: format!("slice {start}..{} out of bounds", start + len),
                });
            }
            Ok(Tensor::vector(x.values()[start..start + len].to_vec()))
        })
    }

    /// Contiguous column block of a matrix.
    pub fn slice_cols(self, start: usize, len: usize) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::SliceCols { start, len }, |x| {
            require_rank(x, 2, "slice_cols")?;
            if start + len > x.cols() {
                return Err(GradError::InvalidShape {
                    op: "slice_cols",
                    shape: x.shape().to_vec(),
                    detail: format!("columns {start}..{} out of bounds", start + len),
                });
            }
            let (r, c) = (x.rows(), x.cols());
            let mut out = Vec::with_capacity(r * len);
            for i in 0..r {
                out.extend_from_slice(&x.values()[i * c + start..i * c + start + len]);
            }
            Tensor::new(vec![r, len], out)
        })
    }

    /// Reinterpret the value with a new shape of equal element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Var<'t, T>, GradError> {
        self.unary(Op::Reshape, |x| {
            let n: usize = shape.iter().product();
            if n != x.len() {
                return Err(GradError::InvalidShape {
                    op: "reshape",
                    shape: x.shape().to_vec(),
                    detail: format!("cannot reshape to {shape:?}"),
                });
            }
            Tensor::new(shape.clone(), x.values().to_vec())
        })
    }

    /// Gather rows of an embedding matrix by index.
    pub fn gather(self, indices: &[usize]) -> Result<Var<'t, T>, GradError> {
        let idx = indices.to_vec();
        self.unary(Op::Gather { indices: idx }, |x| {
            require_rank(x, 2, "gather")?;
            let (v, d) = (x.rows(), x.cols());
            let mut out = Vec::with_capacity(indices.len() * d);
            for &i in indices {
                if i >= v {
                    return Err(GradError::InvalidShape {
                        op: "gather",
                        shape: x.shape().to_vec(),
                        detail: format!("index {i} out of vocabulary {v}"),
                    });
                }
                out.extend_from_slice(&x.values()[i * d..(i + 1) * d]);
            }
            Tensor::new(vec![indices.len(), d], out)
        })
    }
}

fn rhs_scalar_check<T: Scalar>(scalar: Var<'_, T>) -> Result<Var<'_, T>, GradError> {
    let shape = scalar.shape();
    if shape.iter().product::<usize>() != 1 {
        return Err(GradError::InvalidShape {
            op: "mul_scalar",
            shape,
            detail: "scalar operand must have one element".into(),
        });
    }
    Ok(scalar)
}

fn sigmoid<T: Scalar>(x: T) -> T {
    let one = T::one();
    if x >= T::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    }
}

fn norm<T: Scalar>(values: &[T]) -> T {
    values.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

fn require_rank<T: Scalar>(
    x: &Tensor<T>,
    rank: usize,
    op: &'static str,
) -> Result<(), GradError> {
    if x.shape().len() != rank {
        return Err(GradError::InvalidShape {
            op,
            shape: x.shape().to_vec(),
            detail: format!("expected rank {rank}"),
        });
    }
    Ok(())
}

fn elementwise<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    op: &'static str,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>, GradError> {
    if a.shape() != b.shape() {
        return Err(GradError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Tensor::new(
        a.shape().to_vec(),
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| f(*x, *y))
            .collect(),
    )
}

fn matmul_forward<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, GradError> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(GradError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a.values()[i * k + p];
            let brow = &b.values()[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] = orow[j] + av * brow[j];
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

fn mean_axis_forward<T: Scalar>(x: &Tensor<T>, axis: usize) -> Result<Tensor<T>, GradError> {
    match (x.shape().len(), axis) {
        (1, 0) => {
            if x.is_empty() {
                return Err(GradError::InvalidShape {
                    op: "mean_axis",
                    shape: x.shape().to_vec(),
                    detail: "mean of empty vector".into(),
                });
            }
            let n = T::from_f64(x.len() as f64);
            Ok(Tensor::scalar(x.values().iter().copied().sum::<T>() / n))
        }
        (2, 0) => {
            let (r, c) = (x.rows(), x.cols());
            if r == 0 {
                return Err(GradError::InvalidShape {
                    op: "mean_axis",
                    shape: x.shape().to_vec(),
                    detail: "mean over empty rows".into(),
                });
            }
            let n = T::from_f64(r as f64);
            let mut out = vec![T::zero(); c];
            for i in 0..r {
                for j in 0..c {
                    out[j] = out[j] + x.values()[i * c + j];
                }
            }
            for v in &mut out {
                *v = *v / n;
            }
            Ok(Tensor::vector(out))
        }
        (2, 1) => {
            let (r, c) = (x.rows(), x.cols());
            if c == 0 {
                return Err(GradError::InvalidShape {
                    op: "mean_axis",
                    shape: x.shape().to_vec(),
                    detail: "mean over empty columns".into(),
                });
            }
            let n = T::from_f64(c as f64);
            let mut out = vec![T::zero(); r];
            for i in 0..r {
                out[i] = x.values()[i * c..(i + 1) * c].iter().copied().sum::<T>() / n;
            }
            Ok(Tensor::vector(out))
        }
        _ => Err(GradError::InvalidShape {
            op: "mean_axis",
            shape: x.shape().to_vec(),
            detail: format!("axis {axis} unsupported for this rank"),
        }),
    }
}

fn concat_forward<T: Scalar>(parts: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>, GradError> {
    let rank = parts[0].shape().len();
    match (rank, axis) {
        (1, 0) => {
            let mut out = Vec::new();
            for p in parts {
                if p.shape().len() != 1 {
                    return Err(GradError::ShapeMismatch {
                        op: "concat",
                        lhs: parts[0].shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
                out.extend_from_slice(p.values());
            }
            Ok(Tensor::vector(out))
        }
        (2, 0) => {
            let c = parts[0].cols();
            let mut out = Vec::new();
            let mut rows = 0;
            for p in parts {
                if p.shape().len() != 2 || p.cols() != c {
                    return Err(GradError::ShapeMismatch {
                        op: "concat",
                        lhs: parts[0].shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
                rows += p.rows();
                out.extend_from_slice(p.values());
            }
            Tensor::new(vec![rows, c], out)
        }
        (2, 1) => {
            let r = parts[0].rows();
            for p in parts {
                if p.shape().len() != 2 || p.rows() != r {
                    return Err(GradError::ShapeMismatch {
                        op: "concat",
                        lhs: parts[0].shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
            }
            let total: usize = parts.iter().map(|p| p.cols()).sum();
            let mut out = Vec::with_capacity(r * total);
            for i in 0..r {
                for p in parts {
                    let c = p.cols();
                    out.extend_from_slice(&p.values()[i * c..(i + 1) * c]);
                }
            }
            Tensor::new(vec![r, total], out)
        }
        _ => Err(GradError::InvalidShape {
            op: "concat",
            shape: parts[0].shape().to_vec(),
            detail: format!("axis {axis} unsupported for this rank"),
        }),
    }
}

/// Vector-Jacobian product of one node. Returns one optional gradient per
/// parent, in parent order.
fn backward_op<T: Scalar>(
    node: &Node<T>,
    nodes: &[Node<T>],
    g: &Tensor<T>,
) -> Vec<Option<Tensor<T>>> {
    let parent = |i: usize| &nodes[node.parents[i]].value;
    match &node.op {
        Op::Leaf => vec![],
        Op::MatMul => {
            let (a, b) = (parent(0), parent(1));
            let (m, k, n) = (a.rows(), a.cols(), b.cols());
            // dA = G @ B^T
            let mut da = vec![T::zero(); m * k];
            for i in 0..m {
                for p in 0..k {
                    let mut acc = T::zero();
                    for j in 0..n {
                        acc = acc + g.values()[i * n + j] * b.values()[p * n + j];
                    }
                    da[i * k + p] = acc;
                }
            }
            // dB = A^T @ G
            let mut db = vec![T::zero(); k * n];
            for p in 0..k {
                for j in 0..n {
                    let mut acc = T::zero();
                    for i in 0..m {
                        acc = acc + a.values()[i * k + p] * g.values()[i * n + j];
                    }
                    db[p * n + j] = acc;
                }
            }
            vec![
                Some(Tensor::new(vec![m, k], da).expect("shape")),
                Some(Tensor::new(vec![k, n], db).expect("shape")),
            ]
        }
        Op::Transpose => {
            let x = parent(0);
            let (r, c) = (x.rows(), x.cols());
            let mut dx = vec![T::zero(); r * c];
            for i in 0..r {
                for j in 0..c {
                    dx[i * c + j] = g.values()[j * r + i];
                }
            }
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::Add => vec![Some(g.clone()), Some(g.clone())],
        Op::Sub => {
            let neg = Tensor::new(
                g.shape().to_vec(),
                g.values().iter().map(|v| -*v).collect(),
            )
            .expect("shape");
            vec![Some(g.clone()), Some(neg)]
        }
        Op::Mul => {
            let (a, b) = (parent(0), parent(1));
            let da = zip_map(g, b, |gv, bv| gv * bv);
            let db = zip_map(g, a, |gv, av| gv * av);
            vec![Some(da), Some(db)]
        }
        Op::MulScalar => {
            let (x, s) = (parent(0), parent(1));
            let k = s.item();
            let dx = Tensor::new(
                x.shape().to_vec(),
                g.values().iter().map(|gv| *gv * k).collect(),
            )
            .expect("shape");
            let ds: T = g
                .values()
                .iter()
                .zip(x.values())
                .map(|(gv, xv)| *gv * *xv)
                .sum();
            vec![Some(dx), Some(Tensor::scalar(ds))]
        }
        Op::AffineConst { mul } => {
            let dx = Tensor::new(
                g.shape().to_vec(),
                g.values().iter().map(|gv| *gv * *mul).collect(),
            )
            .expect("shape");
            vec![Some(dx)]
        }
        Op::Clamp { lo, hi } => {
            let x = parent(0);
            let dx = Tensor::new(
                x.shape().to_vec(),
                x.values()
                    .iter()
                    .zip(g.values())
                    .map(|(xv, gv)| {
                        if *xv > *lo && *xv < *hi {
                            *gv
                        } else {
                            T::zero()
                        }
                    })
                    .collect(),
            )
            .expect("shape");
            vec![Some(dx)]
        }
        Op::Tanh => {
            let y = &node.value;
            let dx = zip_map(g, y, |gv, yv| gv * (T::one() - yv * yv));
            vec![Some(dx)]
        }
        Op::Sigmoid => {
            let y = &node.value;
            let dx = zip_map(g, y, |gv, yv| gv * yv * (T::one() - yv));
            vec![Some(dx)]
        }
        Op::Exp => {
            let y = &node.value;
            let dx = zip_map(g, y, |gv, yv| gv * yv);
            vec![Some(dx)]
        }
        Op::Ln => {
            let x = parent(0);
            let dx = zip_map(g, x, |gv, xv| gv / xv);
            vec![Some(dx)]
        }
        Op::Relu => {
            let x = parent(0);
            let dx = zip_map(g, x, |gv, xv| if xv > T::zero() { gv } else { T::zero() });
            vec![Some(dx)]
        }
        Op::Dot => {
            let (a, b) = (parent(0), parent(1));
            let k = g.item();
            let da = Tensor::vector(b.values().iter().map(|v| *v * k).collect());
            let db = Tensor::vector(a.values().iter().map(|v| *v * k).collect());
            vec![Some(da), Some(db)]
        }
        Op::CosineSim => {
            let (a, b) = (parent(0), parent(1));
            let k = g.item();
            let na = norm(a.values());
            let nb = norm(b.values());
            let c = node.value.item();
            let da = Tensor::vector(
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(av, bv)| k * (*bv / (na * nb) - c * *av / (na * na)))
                    .collect(),
            );
            let db = Tensor::vector(
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(av, bv)| k * (*av / (na * nb) - c * *bv / (nb * nb)))
                    .collect(),
            );
            vec![Some(da), Some(db)]
        }
        Op::Sum => {
            let x = parent(0);
            let k = g.item();
            vec![Some(Tensor::new(
                x.shape().to_vec(),
                vec![k; x.len()],
            )
            .expect("shape"))]
        }
        Op::MeanAxis { axis } => {
            let x = parent(0);
            let dx = match (x.shape().len(), axis) {
                (1, 0) => {
                    let k = g.item() / T::from_f64(x.len() as f64);
                    Tensor::vector(vec![k; x.len()])
                }
                (2, 0) => {
                    let (r, c) = (x.rows(), x.cols());
                    let k = T::from_f64(r as f64);
                    let mut dx = vec![T::zero(); r * c];
                    for i in 0..r {
                        for j in 0..c {
                            dx[i * c + j] = g.values()[j] / k;
                        }
                    }
                    Tensor::new(vec![r, c], dx).expect("shape")
                }
                (2, 1) => {
                    let (r, c) = (x.rows(), x.cols());
                    let k = T::from_f64(c as f64);
                    let mut dx = vec![T::zero(); r * c];
                    for i in 0..r {
                        for j in 0..c {
                            dx[i * c + j] = g.values()[i] / k;
                        }
                    }
                    Tensor::new(vec![r, c], dx).expect("shape")
                }
                _ => unreachable!("validated in forward"),
            };
            vec![Some(dx)]
        }
        Op::MaxPoolRows { argmax } => {
            let x = parent(0);
            let (r, c) = (x.rows(), x.cols());
            let mut dx = vec![T::zero(); r * c];
            for j in 0..c {
                dx[argmax[j] * c + j] = g.values()[j];
            }
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::SoftmaxRows => {
            let y = &node.value;
            let (r, c) = (y.rows(), y.cols());
            let mut dx = vec![T::zero(); r * c];
            for i in 0..r {
                let yrow = &y.values()[i * c..(i + 1) * c];
                let grow = &g.values()[i * c..(i + 1) * c];
                let dot: T = yrow.iter().zip(grow).map(|(yv, gv)| *yv * *gv).sum();
                for j in 0..c {
                    dx[i * c + j] = yrow[j] * (grow[j] - dot);
                }
            }
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::LayerNormRows { eps } => {
            let x = parent(0);
            let y = &node.value;
            let (r, c) = (x.rows(), x.cols());
            let n = T::from_f64(c as f64);
            let mut dx = vec![T::zero(); r * c];
            for i in 0..r {
                let xrow = &x.values()[i * c..(i + 1) * c];
                let yrow = &y.values()[i * c..(i + 1) * c];
                let grow = &g.values()[i * c..(i + 1) * c];
                let mean = xrow.iter().copied().sum::<T>() / n;
                let var = xrow.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / n;
                let s = (var + *eps).sqrt();
                let g_mean = grow.iter().copied().sum::<T>() / n;
                let gy_mean = grow
                    .iter()
                    .zip(yrow)
                    .map(|(gv, yv)| *gv * *yv)
                    .sum::<T>()
                    / n;
                for j in 0..c {
                    dx[i * c + j] = (grow[j] - g_mean - yrow[j] * gy_mean) / s;
                }
            }
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::BroadcastRows => {
            let x = parent(0);
            let c = x.len();
            let rows = node.value.rows();
            let mut dx = vec![T::zero(); c];
            for i in 0..rows {
                for j in 0..c {
                    dx[j] = dx[j] + g.values()[i * c + j];
                }
            }
            vec![Some(Tensor::vector(dx))]
        }
        Op::Concat { axis } => {
            let rank = parent(0).shape().len();
            match (rank, axis) {
                (1, 0) => {
                    let mut out = Vec::with_capacity(node.parents.len());
                    let mut offset = 0;
                    for p in 0..node.parents.len() {
                        let len = parent(p).len();
                        out.push(Some(Tensor::vector(
                            g.values()[offset..offset + len].to_vec(),
                        )));
                        offset += len;
                    }
                    out
                }
                (2, 0) => {
                    let mut out = Vec::with_capacity(node.parents.len());
                    let mut offset = 0;
                    for p in 0..node.parents.len() {
                        let t = parent(p);
                        let len = t.len();
                        out.push(Some(
                            Tensor::new(
                                t.shape().to_vec(),
                                g.values()[offset..offset + len].to_vec(),
                            )
                            .expect("shape"),
                        ));
                        offset += len;
                    }
                    out
                }
                (2, 1) => {
                    let r = parent(0).rows();
                    let total = node.value.cols();
                    let mut out = Vec::with_capacity(node.parents.len());
                    let mut col_offset = 0;
                    for p in 0..node.parents.len() {
                        let t = parent(p);
                        let c = t.cols();
                        let mut dp = Vec::with_capacity(r * c);
                        for i in 0..r {
                            dp.extend_from_slice(
                                &g.values()[i * total + col_offset..i * total + col_offset + c],
                            );
                        }
                        out.push(Some(Tensor::new(vec![r, c], dp).expect("shape")));
                        col_offset += c;
                    }
                    out
                }
                _ => unreachable!("validated in forward"),
            }
        }
        Op::StackRows => {
            let c = node.value.cols();
            (0..node.parents.len())
                .map(|i| {
                    Some(Tensor::vector(
                        g.values()[i * c..(i + 1) * c].to_vec(),
                    ))
                })
                .collect()
        }
        Op::Row { index } => {
            let x = parent(0);
            let (r, c) = (x.rows(), x.cols());
            let mut dx = vec![T::zero(); r * c];
            dx[index * c..(index + 1) * c].copy_from_slice(g.values());
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::Slice { start } => {
            let x = parent(0);
            let mut dx = vec![T::zero(); x.len()];
            dx[*start..*start + g.len()].copy_from_slice(g.values());
            vec![Some(Tensor::vector(dx))]
        }
        Op::SliceCols { start, len } => {
            let x = parent(0);
            let (r, c) = (x.rows(), x.cols());
            let mut dx = vec![T::zero(); r * c];
            for i in 0..r {
                for j in 0..*len {
                    dx[i * c + start + j] = g.values()[i * len + j];
                }
            }
            vec![Some(Tensor::new(vec![r, c], dx).expect("shape"))]
        }
        Op::Reshape => {
            let x = parent(0);
            vec![Some(
                Tensor::new(x.shape().to_vec(), g.values().to_vec()).expect("shape"),
            )]
        }
        Op::Gather { indices } => {
            let x = parent(0);
            let (v, d) = (x.rows(), x.cols());
            let mut dx = vec![T::zero(); v * d];
            for (i, &idx) in indices.iter().enumerate() {
                for j in 0..d {
                    dx[idx * d + j] = dx[idx * d + j] + g.values()[i * d + j];
                }
            }
            vec![Some(Tensor::new(vec![v, d], dx).expect("shape"))]
        }
    }
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    Tensor::new(
        a.shape().to_vec(),
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| f(*x, *y))
            .collect(),
    )
    .expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tape() -> Tape<f64> {
        Tape::new()
    }

    #[test]
    fn matmul_shapes() {
        let t = tape();
        let a = t.constant(Tensor::matrix(2, 3, vec![1.0; 6]).unwrap());
        let b = t.constant(Tensor::matrix(3, 4, vec![1.0; 12]).unwrap());
        let c = a.matmul(b).unwrap();
        assert_eq!(c.shape(), vec![2, 4]);
        assert_eq!(c.value().values()[0], 3.0);
    }

    #[test]
    fn matmul_shape_mismatch_names_operation() {
        let t = tape();
        let a = t.constant(Tensor::matrix(2, 3, vec![1.0; 6]).unwrap());
        let b = t.constant(Tensor::matrix(2, 4, vec![1.0; 8]).unwrap());
        let err = a.matmul(b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("matmul"), "{msg}");
        assert!(msg.contains("[2, 3]") && msg.contains("[2, 4]"), "{msg}");
    }

    #[test]
    fn tanh_zero_has_unit_gradient() {
        let t = tape();
        let x = t.param(Tensor::scalar(0.0));
        let y = x.tanh().unwrap();
        assert_eq!(y.item(), 0.0);
        let grads = t.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().item(), 1.0);
    }

    #[test]
    fn max_pool_elementwise() {
        let t = tape();
        let x = t.constant(Tensor::matrix(2, 2, vec![1.0, 5.0, 3.0, 2.0]).unwrap());
        let y = x.max_pool_rows().unwrap();
        assert_eq!(y.value().values(), &[3.0, 5.0]);
    }

    #[test]
    fn sum_of_squares_gradient_is_two_v() {
        let t = tape();
        let v = t.param(Tensor::vector(vec![1.0, -2.0, 3.0]));
        let loss = v.mul(v).unwrap().sum().unwrap();
        let grads = t.backward(loss).unwrap();
        assert_eq!(grads.get(v).unwrap().values(), &[2.0, -4.0, 6.0]);
    }

    #[test]
    fn dot_gradient_swaps_operands() {
        let t = tape();
        let a = t.param(Tensor::vector(vec![1.0, 2.0]));
        let b = t.param(Tensor::vector(vec![3.0, 4.0]));
        let loss = a.dot(b).unwrap();
        let grads = t.backward(loss).unwrap();
        assert_eq!(grads.get(a).unwrap().values(), &[3.0, 4.0]);
        assert_eq!(grads.get(b).unwrap().values(), &[1.0, 2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let t = tape();
        let v = t.param(Tensor::vector(vec![1.0, 2.0]));
        let y = v.scale(2.0).unwrap();
        assert!(matches!(
            t.backward(y),
            Err(GradError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn two_tapes_never_mix() {
        let t1 = Tape::<f64>::new();
        let t2 = Tape::<f64>::new();
        let a = t1.param(Tensor::scalar(1.0));
        let b = t2.param(Tensor::scalar(2.0));
        assert!(matches!(a.add(b), Err(GradError::TapeMismatch { .. })));
    }

    #[test]
    fn gradient_accumulates_over_shared_input() {
        // loss = a*2 + a*3 -> d a = 5
        let t = tape();
        let a = t.param(Tensor::scalar(1.0));
        let loss = a.scale(2.0).unwrap().add(a.scale(3.0).unwrap()).unwrap();
        let grads = t.backward(loss).unwrap();
        assert_eq!(grads.get(a).unwrap().item(), 5.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let t = tape();
        let x = t.constant(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap());
        let y = x.softmax_rows().unwrap().value();
        for i in 0..2 {
            let s: f64 = y.values()[i * 3..(i + 1) * 3].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_of_identical_vectors_is_one() {
        let t = tape();
        let a = t.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let b = t.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
        assert!((a.cosine(b).unwrap().item() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concat_cols_round_trip() {
        let t = tape();
        let a = t.constant(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = t.constant(Tensor::matrix(2, 1, vec![9.0, 8.0]).unwrap());
        let c = t.concat(&[a, b], 1).unwrap();
        assert_eq!(c.shape(), vec![2, 3]);
        assert_eq!(c.value().values(), &[1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
    }

    #[test]
    fn forward_values_stay_finite() {
        let t = tape();
        let x = t.constant(Tensor::vector(vec![-30.0, 0.0, 30.0]));
        for y in [
            x.sigmoid().unwrap(),
            x.tanh().unwrap(),
            x.relu().unwrap(),
        ] {
            assert!(y.value().all_finite());
        }
    }
}
