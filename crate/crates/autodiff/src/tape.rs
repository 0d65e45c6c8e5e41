//! Recording tape for reverse-mode differentiation.
//!
//! A [`Tape`] owns the nodes of one computation graph. [`Var`] is a copyable
//! handle into a tape; operations on vars append nodes. Nodes are created in
//! topological order (parents always precede children), so the backward pass
//! is a single reverse sweep that visits each node once.

use std::cell::RefCell;

use crate::real::Real;
use crate::tensor::{numel, Tensor};

/// Gradient contributions a node sends to its parents: `(parent id, grad)`.
pub(crate) type Contribs<T> = Vec<(usize, Vec<T>)>;

/// Backward rule: `(own node id, incoming grad, values) -> contributions`.
pub(crate) type BackFn<T> = Box<dyn Fn(usize, &[T], &ValueView<'_, T>) -> Contribs<T>>;

pub(crate) struct Node<T> {
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    pub requires_grad: bool,
    pub back: Option<BackFn<T>>,
}

/// Read access to recorded forward values, handed to backward rules.
pub struct ValueView<'a, T> {
    nodes: &'a [Node<T>],
}

impl<'a, T: Real> ValueView<'a, T> {
    pub fn value(&self, id: usize) -> &[T] {
        &self.nodes[id].value
    }
    pub fn shape(&self, id: usize) -> &[usize] {
        &self.nodes[id].shape
    }
    /// Whether a parent participates in the gradient; backward rules may
    /// skip computing contributions for parents that do not.
    pub fn needs_grad(&self, id: usize) -> bool {
        self.nodes[id].requires_grad
    }
}

pub struct Tape<T: Real> {
    inner: RefCell<Vec<Node<T>>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Leaf holding a copy of `tensor`. Only leaves can require grad directly.
    pub fn leaf(&self, tensor: &Tensor<T>, requires_grad: bool) -> Var<'_, T> {
        self.push_node(
            tensor.shape().to_vec(),
            tensor.data().to_vec(),
            requires_grad,
            None,
        )
    }

    /// Non-differentiable constant.
    pub fn constant(&self, tensor: &Tensor<T>) -> Var<'_, T> {
        self.leaf(tensor, false)
    }

    pub fn scalar(&self, value: f64) -> Var<'_, T> {
        self.constant(&Tensor::scalar(T::from_f64(value)))
    }

    pub(crate) fn push_node(
        &self,
        shape: Vec<usize>,
        value: Vec<T>,
        requires_grad: bool,
        back: Option<BackFn<T>>,
    ) -> Var<'_, T> {
        debug_assert_eq!(numel(&shape), value.len());
        let mut nodes = self.inner.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            shape,
            value,
            requires_grad,
            back,
        });
        Var { tape: self, id }
    }

    pub(crate) fn with_nodes<R>(&self, f: impl FnOnce(&[Node<T>]) -> R) -> R {
        f(&self.inner.borrow())
    }

    /// Reverse sweep from `loss` (must be a scalar). Every node that requires
    /// grad and is reachable from the loss receives its gradient; everything
    /// else reads back as zero.
    pub fn backward(&self, loss: Var<'_, T>) -> Gradients<T> {
        assert!(
            std::ptr::eq(self, loss.tape),
            "backward: loss belongs to a different graph"
        );
        let nodes = self.inner.borrow();
        assert_eq!(
            numel(&nodes[loss.id].shape),
            1,
            "backward: loss must be scalar, got shape {:?}",
            nodes[loss.id].shape
        );
        let n = nodes.len();
        let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(n);
        grads.resize_with(n, || None);
        grads[loss.id] = Some(vec![T::ONE]);

        for id in (0..=loss.id).rev() {
            if !nodes[id].requires_grad {
                continue;
            }
            let Some(back) = &nodes[id].back else {
                continue; // leaf
            };
            let own = grads[id].take();
            if let Some(g) = &own {
                let view = ValueView { nodes: &nodes };
                for (pid, contrib) in back(id, g, &view) {
                    debug_assert!(pid < id, "graph must be topologically ordered");
                    if !nodes[pid].requires_grad {
                        continue;
                    }
                    match &mut grads[pid] {
                        Some(existing) => {
                            for (e, c) in existing.iter_mut().zip(contrib.iter()) {
                                *e += *c;
                            }
                        }
                        slot @ None => *slot = Some(contrib),
                    }
                }
            }
            grads[id] = own;
        }

        let shapes = nodes.iter().map(|n| n.shape.clone()).collect();
        Gradients { grads, shapes }
    }
}

/// Handle to one node of a tape. Cheap to copy; all ops live here.
pub struct Var<'t, T: Real> {
    pub(crate) tape: &'t Tape<T>,
    pub(crate) id: usize,
}

impl<T: Real> Clone for Var<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T: Real> Copy for Var<'_, T> {}

impl<T: Real> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

impl<'t, T: Real> Var<'t, T> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.with_nodes(|n| n[self.id].shape.clone())
    }

    pub fn numel(&self) -> usize {
        self.tape.with_nodes(|n| n[self.id].value.len())
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.with_nodes(|n| n[self.id].requires_grad)
    }

    /// Copy of the forward value.
    pub fn value(&self) -> Tensor<T> {
        self.tape
            .with_nodes(|n| Tensor::new(n[self.id].shape.clone(), n[self.id].value.clone()))
    }

    pub fn scalar_value(&self) -> T {
        self.tape.with_nodes(|n| {
            assert_eq!(
                n[self.id].value.len(),
                1,
                "scalar_value on tensor of shape {:?}",
                n[self.id].shape
            );
            n[self.id].value[0]
        })
    }

    pub fn backward(&self) -> Gradients<T> {
        self.tape.backward(*self)
    }

    pub(crate) fn same_tape(&self, other: &Var<'t, T>, op: &str) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "{op}: operands recorded on different graphs"
        );
    }
}

/// Gradients keyed by node id, materialized as zeros for untouched nodes.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of `var`; identical shape to the var, zero if disconnected.
    pub fn get(&self, var: Var<'_, T>) -> Tensor<T> {
        let shape = self.shapes[var.id].clone();
        match &self.grads[var.id] {
            Some(g) => Tensor::new(shape, g.clone()),
            None => Tensor::zeros(&shape),
        }
    }

    /// Gradient if the node was reached by the backward sweep.
    pub fn get_opt(&self, var: Var<'_, T>) -> Option<Tensor<T>> {
        self.grads[var.id]
            .as_ref()
            .map(|g| Tensor::new(self.shapes[var.id].clone(), g.clone()))
    }
}
