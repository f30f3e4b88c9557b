//! Reference-counted tensors with a recorded reverse-mode graph.

use std::cell::Cell;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock, RwLockReadGuard};

use crate::error::{NnError, Result};
use crate::scalar::Scalar;

/// Maps the gradient of an op's output to gradients of its parents, in
/// parent order. `None` means "no gradient for this parent".
pub type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Option<Vec<T>>> + Send + Sync>;

struct GradFn<T: Scalar> {
    parents: Vec<Tensor<T>>,
    backward: BackwardFn<T>,
}

struct Node<T: Scalar> {
    id: usize,
    shape: Vec<usize>,
    data: RwLock<Vec<T>>,
    grad: Mutex<Option<Vec<T>>>,
    requires_grad: bool,
    grad_fn: Option<GradFn<T>>,
}

/// A row-major n-dimensional array. Cloning is cheap and shares storage.
pub struct Tensor<T: Scalar = f32>(Arc<Node<T>>);

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor(self.0.clone())
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

static NEXT_ID: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` without recording a graph on this thread.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|g| g.replace(false)));
    f()
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn check_finite<T: Scalar>(what: &str, data: &[T]) -> Result<()> {
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(NnError::Numeric(format!(
            "{what}: non-finite value {:?} at index {i}",
            data[i]
        )));
    }
    Ok(())
}

impl<T: Scalar> Tensor<T> {
    fn from_node(shape: Vec<usize>, data: Vec<T>, requires_grad: bool, grad_fn: Option<GradFn<T>>) -> Self {
        Tensor(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RwLock::new(data),
            grad: Mutex::new(None),
            requires_grad,
            grad_fn,
        }))
    }

    fn validate(shape: &[usize], len: usize) -> Result<()> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(NnError::Shape(format!("shape {shape:?} must be non-empty and positive")));
        }
        if numel(shape) != len {
            return Err(NnError::Shape(format!(
                "shape {shape:?} holds {} values, got {len}",
                numel(shape)
            )));
        }
        Ok(())
    }

    /// A constant (no gradient).
    pub fn new(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        Self::validate(shape, data.len())?;
        check_finite("tensor data", &data)?;
        Ok(Self::from_node(shape.to_vec(), data, false, None))
    }

    /// A trainable leaf.
    pub fn param(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        Self::validate(shape, data.len())?;
        check_finite("parameter data", &data)?;
        Ok(Self::from_node(shape.to_vec(), data, true, None))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(vec![T::zero(); numel(shape)], shape).expect("positive shape")
    }

    pub fn scalar(v: T) -> Self {
        Self::new(vec![v], &[1]).expect("one value")
    }

    /// Result of a differentiable operation.
    ///
    /// The graph edge is recorded only when gradients are enabled on this
    /// thread and some parent requires a gradient; otherwise the output is a
    /// plain constant. Non-finite outputs are rejected.
    pub fn from_op(
        data: Vec<T>,
        shape: &[usize],
        parents: Vec<Tensor<T>>,
        backward: impl Fn(&[T]) -> Vec<Option<Vec<T>>> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::validate(shape, data.len())?;
        check_finite("op output", &data)?;
        let track = grad_enabled() && parents.iter().any(|p| p.requires_grad());
        if !track {
            return Ok(Self::from_node(shape.to_vec(), data, false, None));
        }
        Ok(Self::from_node(
            shape.to_vec(),
            data,
            true,
            Some(GradFn {
                parents,
                backward: Box::new(backward),
            }),
        ))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.is_none()
    }

    pub fn data(&self) -> RwLockReadGuard<'_, Vec<T>> {
        self.0.data.read()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.data.read().clone()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> T {
        let d = self.0.data.read();
        assert_eq!(d.len(), 1, "item() on tensor of shape {:?}", self.0.shape);
        d[0]
    }

    /// Overwrites the values in place (optimizer updates, running stats,
    /// checkpoint loads). Does not touch the graph.
    pub fn set_data(&self, data: Vec<T>) -> Result<()> {
        if data.len() != self.numel() {
            return Err(NnError::Shape(format!(
                "set_data: {} values for shape {:?}",
                data.len(),
                self.0.shape
            )));
        }
        check_finite("set_data", &data)?;
        *self.0.data.write() = data;
        Ok(())
    }

    pub fn update_data(&self, f: impl FnOnce(&mut [T])) {
        f(&mut self.0.data.write());
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.0.grad.lock().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.lock() = None;
    }

    /// Same values, cut from the graph.
    pub fn detach(&self) -> Self {
        Self::from_node(self.0.shape.clone(), self.to_vec(), false, None)
    }

    /// True when both handles refer to the same storage.
    pub fn same_storage(a: &Tensor<T>, b: &Tensor<T>) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    /// Converts element type (gradient-check shadows); the copy is a leaf
    /// with the same `requires_grad`.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        let data = self.0.data.read().iter().map(|v| U::lit(v.as_f64())).collect();
        Tensor::<U>::from_node(self.0.shape.clone(), data, self.0.requires_grad && self.is_leaf(), None)
    }

    /// Reverse-mode pass from a one-element tensor. Gradients accumulate on
    /// every reachable leaf that requires them.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(NnError::Shape(format!(
                "backward needs a scalar, got shape {:?}",
                self.0.shape
            )));
        }
        if !self.requires_grad() {
            return Err(NnError::Graph(
                "backward on a tensor that is not attached to a recorded graph".into(),
            ));
        }

        // Iterative post-order DFS.
        let mut order: Vec<Tensor<T>> = Vec::new();
        let mut visited: HashMap<usize, ()> = HashMap::new();
        let mut stack: Vec<(Tensor<T>, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if visited.insert(t.0.id, ()).is_some() {
                continue;
            }
            stack.push((t.clone(), true));
            if let Some(gf) = &t.0.grad_fn {
                for p in &gf.parents {
                    if p.requires_grad() && !visited.contains_key(&p.0.id) {
                        stack.push((p.clone(), false));
                    }
                }
            }
        }

        let mut grads: HashMap<usize, Vec<T>> = HashMap::new();
        grads.insert(self.0.id, vec![T::one()]);
        for t in order.iter().rev() {
            let Some(g) = grads.remove(&t.0.id) else { continue };
            match &t.0.grad_fn {
                None => {
                    let mut slot = t.0.grad.lock();
                    match slot.as_mut() {
                        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a = *a + *b),
                        None => *slot = Some(g),
                    }
                }
                Some(gf) => {
                    let parent_grads = (gf.backward)(&g);
                    assert_eq!(parent_grads.len(), gf.parents.len());
                    for (p, pg) in gf.parents.iter().zip(parent_grads) {
                        let Some(pg) = pg else { continue };
                        if !p.requires_grad() {
                            continue;
                        }
                        if pg.len() != p.numel() {
                            return Err(NnError::Shape(format!(
                                "gradient of length {} for parent of shape {:?}",
                                pg.len(),
                                p.shape()
                            )));
                        }
                        check_finite("gradient", &pg)?;
                        match grads.get_mut(&p.0.id) {
                            Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, b)| *a = *a + *b),
                            None => {
                                grads.insert(p.0.id, pg);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
