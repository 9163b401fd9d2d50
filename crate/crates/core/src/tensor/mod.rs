//! Dense `f64` tensors with reverse-mode automatic differentiation.
//!
//! Every operation produces a fresh [`Tensor`] that remembers how it was
//! computed. Calling [`Tensor::backward`] on a scalar walks that graph in
//! reverse topological order and accumulates gradients into every tensor
//! that has `requires_grad` set. The graph is rebuilt on every forward pass
//! and released once the last handle to the loss is dropped.
//!
//! Gradients accumulate: calling `backward` twice without
//! [`Tensor::zero_grad`] in between sums both contributions, which is what
//! mini-batch training relies on.
//!
//! ```
//! use argdialog::tensor::Tensor;
//!
//! let w = Tensor::param(vec![1.0, 2.0], &[2]).unwrap();
//! let x = Tensor::new(vec![3.0, 4.0], &[2]).unwrap();
//! let loss = w.mul(&x).unwrap().sum();
//! loss.backward().unwrap();
//! assert_eq!(loss.item(), 11.0);
//! assert_eq!(w.grad().unwrap(), vec![3.0, 4.0]);
//! ```

mod adam;
mod checkpoint;
mod ops;
mod params;

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use thiserror::Error;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointEntry, CHECKPOINT_VERSION};
pub use params::ParamSet;

use ops::Op;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { len: usize, shape: Vec<usize> },
    #[error("{op}: axis {axis} is invalid for shape {shape:?}")]
    InvalidAxis { op: &'static str, axis: usize, shape: Vec<usize> },
    #[error("class index {index} out of range for {classes} classes")]
    InvalidClass { index: usize, classes: usize },
    #[error("index {index} out of range for dimension of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("cosine similarity of a zero-norm vector")]
    DegenerateVector,
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

struct Node {
    shape: Vec<usize>,
    data: RwLock<Vec<f64>>,
    grad: Mutex<Option<Vec<f64>>>,
    requires_grad: AtomicBool,
    op: Op,
}

/// A reference-counted handle to a node of the compute graph.
///
/// Cloning is cheap and yields a handle to the same storage. Parameter
/// tensors are long-lived leaves; everything else is an intermediate that
/// lives as long as some downstream handle does.
#[derive(Clone)]
pub struct Tensor(Arc<Node>);

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("data", &*self.0.data.read())
            .field("requires_grad", &self.requires_grad())
            .finish()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn new(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(TensorError::DataLength { len: data.len(), shape: shape.to_vec() });
        }
        Ok(Self::leaf(data, shape.to_vec(), false))
    }

    /// A trainable leaf.
    pub fn param(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        let t = Self::new(data, shape)?;
        t.set_requires_grad(true);
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::leaf(vec![0.0; numel(shape)], shape.to_vec(), false)
    }

    pub fn scalar(value: f64) -> Self {
        Self::leaf(vec![value], Vec::new(), false)
    }

    pub fn vector(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::leaf(data, vec![n], false)
    }

    /// Builds a 2-D tensor from equally long rows.
    pub fn matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(TensorError::Config("ragged matrix rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(data, &[rows.len(), cols])
    }

    pub fn eye(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::leaf(data, vec![n, n], false)
    }

    fn leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Self {
        Tensor(Arc::new(Node {
            shape,
            data: RwLock::new(data),
            grad: Mutex::new(None),
            requires_grad: AtomicBool::new(requires_grad),
            op: Op::Leaf,
        }))
    }

    /// Wraps an op result. Parents are only retained when one of them
    /// needs a gradient, so inference builds no graph at all.
    fn from_op(data: Vec<f64>, shape: Vec<usize>, op: Op) -> Self {
        debug_assert_eq!(numel(&shape), data.len());
        let tracked = op.parents().iter().any(|p| p.requires_grad());
        Tensor(Arc::new(Node {
            shape,
            data: RwLock::new(data),
            grad: Mutex::new(None),
            requires_grad: AtomicBool::new(tracked),
            op: if tracked { op } else { Op::Leaf },
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn len(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn data(&self) -> RwLockReadGuard<'_, Vec<f64>> {
        self.0.data.read()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.read().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        let d = self.0.data.read();
        assert_eq!(d.len(), 1, "item() on tensor of shape {:?}", self.0.shape);
        d[0]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0.data.read()[index]
    }

    /// Element `(r, c)` of a 2-D tensor.
    pub fn at(&self, r: usize, c: usize) -> f64 {
        let cols = self.0.shape[1];
        self.0.data.read()[r * cols + c]
    }

    /// Replaces the values in place (same length required).
    pub fn assign(&self, data: &[f64]) -> Result<()> {
        let mut d = self.0.data.write();
        if d.len() != data.len() {
            return Err(TensorError::DataLength { len: data.len(), shape: self.0.shape.clone() });
        }
        d.copy_from_slice(data);
        Ok(())
    }

    pub fn update(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.0.data.write());
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad.load(Ordering::Relaxed)
    }

    /// Toggles gradient tracking. Only meaningful on leaves: a tensor with
    /// tracking off is treated as a constant by every op built after the
    /// change.
    pub fn set_requires_grad(&self, on: bool) {
        self.0.requires_grad.store(on, Ordering::Relaxed);
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.lock().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.lock() = None;
    }

    /// A constant copy cut off from the graph.
    pub fn detach(&self) -> Tensor {
        Self::leaf(self.to_vec(), self.0.shape.clone(), false)
    }

    pub fn same_storage(&self, other: &Tensor) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        if !self.requires_grad() {
            return;
        }
        let mut g = self.0.grad.lock();
        match g.as_mut() {
            Some(buf) => buf.iter_mut().zip(delta).for_each(|(a, b)| *a += b),
            None => *g = Some(delta.to_vec()),
        }
    }

    /// Back-propagates from this scalar into every tracked ancestor.
    pub fn backward(&self) -> Result<()> {
        if self.len() != 1 {
            return Err(TensorError::NotScalar(self.0.shape.clone()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let order = self.topological_order();
        self.accumulate_grad(&[1.0]);
        for node in order.iter().rev() {
            let Some(g) = node.grad() else { continue };
            node.0.op.backprop(node, &g);
        }
        Ok(())
    }

    /// Post-order over tracked nodes reachable from `self`.
    fn topological_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut seen: HashSet<*const Node> = HashSet::new();
        let mut stack: Vec<(Tensor, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !seen.insert(Arc::as_ptr(&t.0)) {
                continue;
            }
            stack.push((t.clone(), true));
            for p in t.0.op.parents() {
                if p.requires_grad() && !seen.contains(&Arc::as_ptr(&p.0)) {
                    stack.push((p.clone(), false));
                }
            }
        }
        order
    }
}

/// `(outer, n, inner)` such that the tensor is an `outer × n × inner` block
/// with `n` the extent of `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = numel(&shape[..axis]);
    let inner = numel(&shape[axis + 1..]);
    (outer, shape[axis], inner)
}
