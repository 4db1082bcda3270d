//! Dense double-precision tensors with reverse-mode automatic
//! differentiation on a dynamic tape.
//!
//! A [`Tape`] records one forward pass; [`Tensor::backward`] replays it in
//! exact reverse order, accumulating adjoints additively. Tensors without a
//! tape node are constants and never receive gradients. A tape is consumed
//! by its backward pass; training builds a fresh tape per step.

mod gradcheck;
mod ops;

pub use gradcheck::gradient_check;

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{Error, Result};

pub(crate) type BackwardFn = Box<dyn Fn(&[f64], &mut Adjoints)>;

struct Node {
    len: usize,
    back: Option<BackwardFn>,
}

struct TapeInner {
    nodes: Vec<Node>,
    grads: Option<Vec<Option<Vec<f64>>>>,
    consumed: bool,
}

/// Records the operations of one forward pass.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            inner: Rc::new(RefCell::new(TapeInner {
                nodes: Vec::new(),
                grads: None,
                consumed: false,
            })),
        }
    }

    fn push_node(&self, len: usize, back: Option<BackwardFn>) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { len, back });
        inner.nodes.len() - 1
    }

    /// Register a gradient-tracked leaf holding `data`.
    pub fn leaf(&self, shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        check_shape_data(shape, data.len())?;
        let id = self.push_node(data.len(), None);
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Rc::new(data),
            node: Some(NodeRef {
                tape: self.clone(),
                id,
            }),
        })
    }

    /// Tracked view of an existing tensor's values (shares the value buffer).
    pub fn watch(&self, t: &Tensor) -> Tensor {
        let id = self.push_node(t.len(), None);
        Tensor {
            shape: t.shape.clone(),
            data: Rc::clone(&t.data),
            node: Some(NodeRef {
                tape: self.clone(),
                id,
            }),
        }
    }

    pub fn node_count(&self) -> usize {
        self.inner.borrow().nodes.len()
    }
}

/// Adjoint buffers indexed by tape node, allocated lazily.
pub(crate) struct Adjoints {
    bufs: Vec<Option<Vec<f64>>>,
    lens: Vec<usize>,
}

impl Adjoints {
    pub(crate) fn buf_mut(&mut self, id: usize) -> &mut [f64] {
        if self.bufs[id].is_none() {
            self.bufs[id] = Some(vec![0.0; self.lens[id]]);
        }
        self.bufs[id].as_mut().unwrap()
    }

    /// Elementwise `adjoint[id] += contrib` for tracked parents.
    pub(crate) fn accumulate(&mut self, id: Option<usize>, contrib: &[f64]) {
        if let Some(id) = id {
            let buf = self.buf_mut(id);
            for (b, c) in buf.iter_mut().zip(contrib) {
                *b += c;
            }
        }
    }
}

#[derive(Clone)]
pub(crate) struct NodeRef {
    pub(crate) tape: Tape,
    pub(crate) id: usize,
}

/// Row-major dense tensor. Cloning is cheap (shared value buffer).
#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Rc<Vec<f64>>,
    node: Option<NodeRef>,
}

fn check_shape_data(shape: &[usize], len: usize) -> Result<()> {
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero dimension in shape {shape:?}")));
    }
    let want: usize = shape.iter().product();
    if want != len {
        return Err(Error::Shape(format!(
            "shape {shape:?} implies {want} values, got {len}"
        )));
    }
    Ok(())
}

impl Tensor {
    /// Untracked tensor from raw values.
    pub fn constant(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        check_shape_data(shape, data.len())?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Rc::new(data),
            node: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: Rc::new(vec![0.0; len]),
            node: None,
        }
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            shape: Vec::new(),
            data: Rc::new(vec![v]),
            node: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Whether this tensor participates in gradient computation.
    pub fn tracked(&self) -> bool {
        self.node.is_some()
    }

    pub fn item(&self) -> Result<f64> {
        if !self.is_scalar() {
            return Err(Error::Shape(format!(
                "item() needs a scalar, shape is {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    /// Run reverse-mode accumulation from this scalar. Consumes the tape:
    /// a second backward on the same tape is an error.
    pub fn backward(&self) -> Result<()> {
        let nr = self.node.as_ref().ok_or_else(|| {
            Error::Numeric("backward needs a tracked tensor (no tape attached)".into())
        })?;
        if !self.is_scalar() {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, shape is {:?}",
                self.shape
            )));
        }
        {
            let mut inner = nr.tape.inner.borrow_mut();
            if inner.consumed {
                return Err(Error::Numeric(
                    "backward already ran on this tape; build a new tape".into(),
                ));
            }
            inner.consumed = true;
        }
        let inner = nr.tape.inner.borrow();
        let lens: Vec<usize> = inner.nodes.iter().map(|n| n.len).collect();
        let mut adj = Adjoints {
            bufs: vec![None; lens.len()],
            lens,
        };
        adj.bufs[nr.id] = Some(vec![1.0]);
        for id in (0..=nr.id).rev() {
            let Some(g) = adj.bufs[id].take() else {
                continue;
            };
            match &inner.nodes[id].back {
                Some(back) => back(&g, &mut adj),
                // leaves keep their accumulated gradient
                None => adj.bufs[id] = Some(g),
            }
        }
        drop(inner);
        nr.tape.inner.borrow_mut().grads = Some(adj.bufs);
        Ok(())
    }

    /// Gradient of the last backward pass with respect to this tensor.
    /// `None` until backward runs, or when the tensor never influenced the
    /// loss. Leaf tensors only; interior adjoints are not retained.
    pub fn grad(&self) -> Option<Tensor> {
        let nr = self.node.as_ref()?;
        let inner = nr.tape.inner.borrow();
        let bufs = inner.grads.as_ref()?;
        bufs[nr.id].as_ref().map(|g| Tensor {
            shape: self.shape.clone(),
            data: Rc::new(g.clone()),
            node: None,
        })
    }

    pub(crate) fn node_id(&self) -> Option<usize> {
        self.node.as_ref().map(|nr| nr.id)
    }

    pub(crate) fn data_rc(&self) -> Rc<Vec<f64>> {
        Rc::clone(&self.data)
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let preview: Vec<f64> = self.data.iter().take(8).copied().collect();
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("tracked", &self.tracked())
            .field("data", &preview)
            .finish()
    }
}

/// Verify all deps that carry a tape share the same one; return it.
pub(crate) fn common_tape(deps: &[&Tensor]) -> Result<Option<Tape>> {
    let mut tape: Option<Tape> = None;
    for d in deps {
        if let Some(nr) = &d.node {
            match &tape {
                None => tape = Some(nr.tape.clone()),
                Some(t) => {
                    if !Rc::ptr_eq(&t.inner, &nr.tape.inner) {
                        return Err(Error::Numeric(
                            "operands belong to different tapes".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok(tape)
}

pub(crate) fn ensure_finite(data: &[f64], op: &str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "non-finite value produced by {op}"
        )))
    }
}

/// Attach a freshly computed result to the deps' tape (constant if no dep is
/// tracked). `build_back` receives the deps' node ids in order.
pub(crate) fn make_result(
    deps: &[&Tensor],
    shape: Vec<usize>,
    data: Vec<f64>,
    op: &'static str,
    build_back: impl FnOnce(Vec<Option<usize>>) -> BackwardFn,
) -> Result<Tensor> {
    check_shape_data(&shape, data.len())?;
    ensure_finite(&data, op)?;
    match common_tape(deps)? {
        None => Ok(Tensor {
            shape,
            data: Rc::new(data),
            node: None,
        }),
        Some(tape) => {
            let ids: Vec<Option<usize>> = deps.iter().map(|d| d.node_id()).collect();
            let back = build_back(ids);
            let id = tape.push_node(data.len(), Some(back));
            Ok(Tensor {
                shape,
                data: Rc::new(data),
                node: Some(NodeRef { tape, id }),
            })
        }
    }
}
