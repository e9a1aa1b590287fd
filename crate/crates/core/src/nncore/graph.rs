//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] borrows a [`ParamStore`] for the duration of one forward
//! pass. Every builder call evaluates its op immediately and records a
//! node; [`Graph::backward`] then walks the nodes in reverse and returns
//! the gradient of every trainable parameter the pass touched.

use std::collections::HashMap;

use super::lstm::{self, LstmCache};
use super::ops::{self, Activation};
use super::{Mask, Tensor};
use crate::error::{Error, Result};

pub type ParamId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
    pub trainable: bool,
}

/// Named parameters in insertion order. Gradient slots live on the tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        tensor: Tensor,
        trainable: bool,
    ) -> Result<ParamId> {
        let name = name.into();
        if self.id(&name).is_some() {
            return Err(Error::Graph(format!("duplicate parameter `{name}`")));
        }
        self.entries.push(ParamEntry {
            name,
            tensor,
            trainable,
        });
        Ok(self.entries.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|i| &self.entries[i].tensor)
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id].tensor
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id]
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id].trainable
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter()
    }

    pub fn num_elements(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn num_trainable_elements(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.tensor.len())
            .sum()
    }

    /// Adds `grads` into the parameters' gradient slots. Calling this
    /// repeatedly without [`ParamStore::zero_grad`] sums the gradients.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (id, g) in grads.iter() {
            self.entries[id].tensor.accumulate_grad(g);
        }
    }

    pub fn zero_grad(&mut self) {
        self.entries.iter_mut().for_each(|e| e.tensor.clear_grad());
    }
}

/// Parameter gradients produced by one backward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    by_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.by_param.get(id).and_then(|g| g.as_deref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.by_param
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_deref().map(|g| (i, g)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Param(ParamId),
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    Act {
        x: Var,
        act: Activation,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Sum {
        x: Var,
    },
    Embedding {
        table: Var,
        ids: Vec<usize>,
        mask: Mask,
    },
    AvgPool {
        x: Var,
        mask: Mask,
    },
    MaxPool {
        x: Var,
        argmax: Vec<usize>,
    },
    Lstm {
        x: Var,
        kernel: Var,
        recurrent: Var,
        bias: Var,
        mask: Mask,
        cache: LstmCache,
    },
    Dropout {
        x: Var,
        scales: Vec<f64>,
    },
    Bce {
        p: Var,
        targets: Vec<f64>,
        weights: Vec<f64>,
        width: usize,
    },
}

struct Node {
    /// `None` for parameter nodes, which read through to the store.
    value: Option<Tensor>,
    op: Op,
    requires_grad: bool,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, Var>,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.store.tensor(id),
            _ => node
                .value
                .as_ref()
                .expect("non-parameter node holds a value"),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value: Some(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant input.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, &[])
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            requires_grad: self.store.is_trainable(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn param_named(&mut self, name: &str) -> Result<Var> {
        let id = self
            .store
            .id(name)
            .ok_or_else(|| Error::Graph(format!("unknown parameter `{name}`")))?;
        Ok(self.param(id))
    }

    /// `act(x·W + b)` for `x[B,n]`, `W[n,m]`, `b[m]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var, act: Activation) -> Result<Var> {
        let (xt, wt, bt) = (self.value(x), self.value(w), self.value(b));
        let (batch, n, m) = ops::check_linear(xt, wt, bt)?;
        let mut y = ops::matmul(xt.data(), wt.data(), batch, n, m);
        for row in y.chunks_mut(m) {
            row.iter_mut()
                .zip(bt.data())
                .for_each(|(v, bias)| *v += bias);
        }
        let lin = self.push(
            Tensor::new(vec![batch, m], y)?,
            Op::Linear { x, w, b },
            &[x, w, b],
        );
        Ok(match act {
            Activation::None => lin,
            act => self.activation(lin, act),
        })
    }

    pub fn activation(&mut self, x: Var, act: Activation) -> Var {
        let xt = self.value(x);
        let y = Tensor::new(
            xt.shape().to_vec(),
            xt.data().iter().map(|&v| act.apply(v)).collect(),
        )
        .expect("same shape");
        self.push(y, Op::Act { x, act }, &[x])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(Error::shape(
                "mul",
                format!("{:?} vs {:?}", at.shape(), bt.shape()),
            ));
        }
        let y = at
            .data()
            .iter()
            .zip(bt.data())
            .map(|(p, q)| p * q)
            .collect();
        let y = Tensor::new(at.shape().to_vec(), y)?;
        Ok(self.push(y, Op::Mul { a, b }, &[a, b]))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum { x }, &[x])
    }

    /// Row lookup `table[V,d]` at `ids[B,L]`; masked positions yield zeros.
    pub fn embedding(&mut self, table: Var, ids: &[usize], mask: &Mask) -> Result<Var> {
        let tt = self.value(table);
        let (v, d) = tt.dims2("embedding")?;
        let (b, l) = (mask.rows(), mask.cols());
        if ids.len() != b * l {
            return Err(Error::shape(
                "embedding",
                format!("{} ids for a {b}x{l} mask", ids.len()),
            ));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(Error::shape(
                "embedding",
                format!("index {bad} out of range for {v} rows"),
            ));
        }
        let mut out = vec![0.0; b * l * d];
        for (pos, &id) in ids.iter().enumerate() {
            if mask.bits()[pos] == 1 {
                out[pos * d..(pos + 1) * d].copy_from_slice(&tt.data()[id * d..(id + 1) * d]);
            }
        }
        let y = Tensor::new(vec![b, l, d], out)?;
        Ok(self.push(
            y,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
                mask: mask.clone(),
            },
            &[table],
        ))
    }

    pub fn global_average_pool(&mut self, x: Var, mask: &Mask) -> Result<Var> {
        let y = ops::global_average_pool(self.value(x), mask)?;
        Ok(self.push(
            y,
            Op::AvgPool {
                x,
                mask: mask.clone(),
            },
            &[x],
        ))
    }

    pub fn global_max_pool(&mut self, x: Var, mask: &Mask) -> Result<Var> {
        let (y, argmax) = ops::max_pool_with_argmax(self.value(x), mask)?;
        Ok(self.push(y, Op::MaxPool { x, argmax }, &[x]))
    }

    pub fn lstm(
        &mut self,
        x: Var,
        mask: &Mask,
        kernel: Var,
        recurrent: Var,
        bias: Var,
    ) -> Result<Var> {
        let (y, cache) = lstm::forward_cached(
            self.value(x),
            mask,
            self.value(kernel),
            self.value(recurrent),
            self.value(bias),
        )?;
        Ok(self.push(
            y,
            Op::Lstm {
                x,
                kernel,
                recurrent,
                bias,
                mask: mask.clone(),
                cache,
            },
            &[x, kernel, recurrent, bias],
        ))
    }

    /// Inverted dropout. Outside training (or at rate 0) this is the
    /// identity and records nothing.
    pub fn dropout(&mut self, x: Var, rate: f64, training: bool, seed: u64) -> Result<Var> {
        ops::check_dropout_rate(rate)?;
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let xt = self.value(x);
        let scales = ops::dropout_scales(xt.len(), rate, seed);
        let y = xt.data().iter().zip(&scales).map(|(v, s)| v * s).collect();
        let y = Tensor::new(xt.shape().to_vec(), y)?;
        Ok(self.push(y, Op::Dropout { x, scales }, &[x]))
    }

    /// Weighted binary cross-entropy of probabilities `p[B,K]` against
    /// `targets[B,K]` with one weight per row.
    pub fn weighted_bce(&mut self, p: Var, targets: &[f64], weights: &[f64]) -> Result<Var> {
        let pt = self.value(p);
        if weights.is_empty() || pt.len() != targets.len() || pt.len() % weights.len() != 0 {
            return Err(Error::shape(
                "weighted_bce",
                format!(
                    "{} probabilities, {} targets, {} weights",
                    pt.len(),
                    targets.len(),
                    weights.len()
                ),
            ));
        }
        let width = pt.len() / weights.len();
        let loss = ops::weighted_bce_wide(pt.data(), targets, weights, width);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Bce {
                p,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
                width,
            },
            &[p],
        ))
    }

    /// Backpropagates from a scalar.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        self.check_var(loss)?;
        if self.value(loss).len() != 1 {
            return Err(Error::Graph(format!(
                "backward needs a scalar, node has shape {:?}",
                self.value(loss).shape()
            )));
        }
        self.backward_from(loss, &[1.0])
    }

    /// Backpropagates an explicit upstream gradient from any node.
    pub fn backward_from(&self, out: Var, upstream: &[f64]) -> Result<Gradients> {
        self.check_var(out)?;
        if upstream.len() != self.value(out).len() {
            return Err(Error::shape(
                "backward",
                format!(
                    "upstream of {} values for a node of {}",
                    upstream.len(),
                    self.value(out).len()
                ),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; out.0 + 1];
        let mut result = Gradients {
            by_param: vec![None; self.store.len()],
        };
        grads[out.0] = Some(upstream.to_vec());

        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let mut send = |v: Var, delta: Vec<f64>| {
                if !self.nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.iter_mut().zip(&delta).for_each(|(a, d)| *a += d),
                    slot => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => match &mut result.by_param[*id] {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, d)| *a += d),
                    slot => *slot = Some(g),
                },
                Op::Linear { x, w, b } => {
                    let (xt, wt) = (self.value(*x), self.value(*w));
                    let (batch, n) = (xt.shape()[0], xt.shape()[1]);
                    let m = wt.shape()[1];
                    if self.nodes[w.0].requires_grad {
                        let mut dw = vec![0.0; n * m];
                        ops::matmul_at_b_acc(&mut dw, xt.data(), &g, batch, n, m);
                        send(*w, dw);
                    }
                    if self.nodes[b.0].requires_grad {
                        let mut db = vec![0.0; m];
                        for row in g.chunks(m) {
                            db.iter_mut().zip(row).for_each(|(a, d)| *a += d);
                        }
                        send(*b, db);
                    }
                    if self.nodes[x.0].requires_grad {
                        send(*x, ops::matmul_a_bt(&g, wt.data(), batch, n, m));
                    }
                }
                Op::Act { x, act } => {
                    let y = node.value.as_ref().expect("value").data();
                    let dx = g
                        .iter()
                        .zip(y)
                        .map(|(d, &yv)| d * act.derivative_from_output(yv))
                        .collect();
                    send(*x, dx);
                }
                Op::Mul { a, b } => {
                    let (at, bt) = (self.value(*a).data(), self.value(*b).data());
                    let da = g.iter().zip(bt).map(|(d, v)| d * v).collect();
                    let db = g.iter().zip(at).map(|(d, v)| d * v).collect();
                    send(*a, da);
                    send(*b, db);
                }
                Op::Sum { x } => {
                    send(*x, vec![g[0]; self.value(*x).len()]);
                }
                Op::Embedding { table, ids, mask } => {
                    let tt = self.value(*table);
                    let d = tt.shape()[1];
                    let mut dt = vec![0.0; tt.len()];
                    for (pos, &id) in ids.iter().enumerate() {
                        if mask.bits()[pos] == 1 {
                            dt[id * d..(id + 1) * d]
                                .iter_mut()
                                .zip(&g[pos * d..(pos + 1) * d])
                                .for_each(|(a, v)| *a += v);
                        }
                    }
                    send(*table, dt);
                }
                Op::AvgPool { x, mask } => {
                    let d = self.value(*x).shape()[2];
                    send(*x, ops::avg_pool_backward(&g, mask, d));
                }
                Op::MaxPool { x, argmax } => {
                    let s = self.value(*x).shape();
                    send(*x, ops::max_pool_backward(&g, argmax, s[0], s[1], s[2]));
                }
                Op::Lstm {
                    x,
                    kernel,
                    recurrent,
                    bias,
                    mask,
                    cache,
                } => {
                    let lg = lstm::backward(
                        &g,
                        self.value(*x),
                        mask,
                        self.value(*kernel),
                        self.value(*recurrent),
                        node.value.as_ref().expect("value"),
                        cache,
                    );
                    send(*kernel, lg.dkernel);
                    send(*recurrent, lg.drecurrent);
                    send(*bias, lg.dbias);
                    send(*x, lg.dx);
                }
                Op::Dropout { x, scales } => {
                    send(*x, g.iter().zip(scales).map(|(d, s)| d * s).collect());
                }
                Op::Bce {
                    p,
                    targets,
                    weights,
                    width,
                } => {
                    let dp = ops::weighted_bce_backward(
                        self.value(*p).data(),
                        targets,
                        weights,
                        *width,
                        g[0],
                    );
                    send(*p, dp);
                }
            }
        }
        Ok(result)
    }

    fn check_var(&self, v: Var) -> Result<()> {
        if self.nodes.is_empty() || v.0 >= self.nodes.len() {
            return Err(Error::Graph("backward called before a forward pass".into()));
        }
        Ok(())
    }
}
