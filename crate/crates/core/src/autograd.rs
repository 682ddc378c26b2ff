//! Parameter storage and two executors for network graphs.
//!
//! Network code is written once against [`Ops`]. [`Graph`] records a tape
//! for reverse-mode differentiation; [`Eager`] evaluates in inference mode
//! and drops intermediates as soon as they go out of scope. Both call the
//! same [`kernels`](crate::kernels), so their outputs are bit-identical.

use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::kernels::{self, PoolKind};
use crate::real::Real;
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
/// Weight of the newest batch in the running-statistics average.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry<T> {
    pub name: String,
    pub value: Tensor<T>,
    /// Running statistics are stored here too but are not optimized.
    pub trainable: bool,
}

/// Named tensors in registration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: Vec<ParamEntry<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { entries: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>, trainable: bool) -> ParamId {
        self.entries.push(ParamEntry {
            name: name.into(),
            value,
            trainable,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].value
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry<T> {
        &self.entries[id.0]
    }

    pub fn entries(&self) -> &[ParamEntry<T>] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry<T>] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    /// Total number of trainable scalars.
    pub fn trainable_count(&self) -> usize {
        self.entries.iter().filter(|e| e.trainable).map(|e| e.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    /// Replaces every tensor with the same-named tensor of `other`.
    ///
    /// Shapes and names must match exactly.
    pub fn load_from(&mut self, other: &[(String, Tensor<T>)]) -> Result<()> {
        if other.len() != self.entries.len() {
            bail!(
                Format,
                "expected {} tensors, found {}",
                self.entries.len(),
                other.len()
            );
        }
        for (entry, (name, value)) in self.entries.iter_mut().zip(other) {
            if &entry.name != name {
                bail!(Format, "expected tensor `{}`, found `{}`", entry.name, name);
            }
            if entry.value.shape() != value.shape() {
                bail!(
                    Format,
                    "tensor `{}` has shape {:?}, architecture expects {:?}",
                    name,
                    value.shape(),
                    entry.value.shape()
                );
            }
            entry.value = value.clone();
        }
        Ok(())
    }

    /// Folds the batch statistics observed during a training forward pass
    /// into the running averages.
    pub fn apply_running_stats(&mut self, updates: &[RunningStatUpdate<T>]) {
        let m = T::from_f64(BN_MOMENTUM);
        let keep = T::one() - m;
        for u in updates {
            for (r, &b) in self.get_mut(u.running_mean).data_mut().iter_mut().zip(&u.batch_mean) {
                *r = keep * *r + m * b;
            }
            for (r, &b) in self.get_mut(u.running_var).data_mut().iter_mut().zip(&u.batch_var) {
                *r = keep * *r + m * b;
            }
        }
    }
}

/// Parameter handles of one batch-normalization layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchNormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
}

#[derive(Debug, Clone)]
pub struct RunningStatUpdate<T> {
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub batch_mean: Vec<T>,
    /// Unbiased estimate.
    pub batch_var: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics drive normalization.
    Train,
    /// Running statistics drive normalization.
    Eval,
}

/// The operator set network definitions are written against.
pub trait Ops<T: Real> {
    type H: Clone;

    fn params(&self) -> &ParamStore<T>;
    fn shape(&self, x: &Self::H) -> [usize; 4];
    fn conv2d(&mut self, x: &Self::H, w: ParamId, b: Option<ParamId>) -> Self::H;
    fn conv_transpose2d(&mut self, x: &Self::H, w: ParamId, b: Option<ParamId>, stride: usize, pad: usize) -> Self::H;
    fn batch_norm(&mut self, x: &Self::H, bn: &BatchNormIds) -> Self::H;
    fn relu(&mut self, x: &Self::H) -> Self::H;
    fn sigmoid(&mut self, x: &Self::H) -> Self::H;
    fn add(&mut self, a: &Self::H, b: &Self::H) -> Self::H;
    fn concat(&mut self, xs: &[Self::H]) -> Self::H;
    fn center_crop(&mut self, x: &Self::H, height: usize, width: usize) -> Self::H;
    fn pool2(&mut self, x: &Self::H, kind: PoolKind) -> Self::H;
}

fn eval_norm<T: Real>(params: &ParamStore<T>, bn: &BatchNormIds) -> (Vec<T>, Vec<T>) {
    let eps = T::from_f64(BN_EPS);
    let mean = params.get(bn.running_mean).data().to_vec();
    let inv_std = params
        .get(bn.running_var)
        .data()
        .iter()
        .map(|&v| T::one() / (v + eps).sqrt())
        .collect();
    (mean, inv_std)
}

/// Inference-only executor; no tape, intermediates are freed eagerly.
pub struct Eager<'a, T> {
    params: &'a ParamStore<T>,
}

impl<'a, T: Real> Eager<'a, T> {
    pub fn new(params: &'a ParamStore<T>) -> Self {
        Eager { params }
    }

    pub fn input(&self, x: Tensor<T>) -> Rc<Tensor<T>> {
        Rc::new(x)
    }
}

impl<T: Real> Ops<T> for Eager<'_, T> {
    type H = Rc<Tensor<T>>;

    fn params(&self) -> &ParamStore<T> {
        self.params
    }

    fn shape(&self, x: &Self::H) -> [usize; 4] {
        x.shape()
    }

    fn conv2d(&mut self, x: &Self::H, w: ParamId, b: Option<ParamId>) -> Self::H {
        Rc::new(kernels::conv2d(x, self.params.get(w), b.map(|b| self.params.get(b))))
    }

    fn conv_transpose2d(&mut self, x: &Self::H, w: ParamId, b: Option<ParamId>, stride: usize, pad: usize) -> Self::H {
        Rc::new(kernels::conv_transpose2d(
            x,
            self.params.get(w),
            b.map(|b| self.params.get(b)),
            stride,
            pad,
        ))
    }

    fn batch_norm(&mut self, x: &Self::H, bn: &BatchNormIds) -> Self::H {
        let (mean, inv_std) = eval_norm(self.params, bn);
        Rc::new(kernels::normalize(
            x,
            &mean,
            &inv_std,
            self.params.get(bn.gamma).data(),
            self.params.get(bn.beta).data(),
        ))
    }

    fn relu(&mut self, x: &Self::H) -> Self::H {
        Rc::new(kernels::relu(x))
    }

    fn sigmoid(&mut self, x: &Self::H) -> Self::H {
        Rc::new(kernels::sigmoid(x))
    }

    fn add(&mut self, a: &Self::H, b: &Self::H) -> Self::H {
        Rc::new(kernels::add(a, b))
    }

    fn concat(&mut self, xs: &[Self::H]) -> Self::H {
        let refs: Vec<&Tensor<T>> = xs.iter().map(|x| &**x).collect();
        Rc::new(kernels::concat(&refs))
    }

    fn center_crop(&mut self, x: &Self::H, height: usize, width: usize) -> Self::H {
        if x.height() == height && x.width() == width {
            return x.clone();
        }
        Rc::new(kernels::center_crop(x, height, width))
    }

    fn pool2(&mut self, x: &Self::H, kind: PoolKind) -> Self::H {
        Rc::new(kernels::pool2(x, kind))
    }
}

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Conv2d { x: Var, w: ParamId, b: Option<ParamId> },
    ConvTranspose2d { x: Var, w: ParamId, b: Option<ParamId>, stride: usize, pad: usize },
    BatchNorm { x: Var, ids: BatchNormIds, mean: Vec<T>, inv_std: Vec<T>, batch_mode: bool },
    Relu(Var),
    Sigmoid(Var),
    Add(Var, Var),
    Concat(Vec<Var>),
    CenterCrop(Var),
    Pool(Var, PoolKind),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Tape-recording executor.
pub struct Graph<'a, T> {
    params: &'a ParamStore<T>,
    mode: Mode,
    nodes: Vec<Node<T>>,
    stat_updates: Vec<RunningStatUpdate<T>>,
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    nodes: Vec<Option<Tensor<T>>>,
    params: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to a recorded value, if it was reached.
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].as_ref()
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.params[id.0].as_ref()
    }

    /// Per-parameter gradients aligned with the store's registration order.
    pub fn into_param_grads(self) -> Vec<Option<Tensor<T>>> {
        self.params
    }
}

fn accumulate<T: Real>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

impl<'a, T: Real> Graph<'a, T> {
    pub fn new(params: &'a ParamStore<T>, mode: Mode) -> Self {
        Graph {
            params,
            mode,
            nodes: Vec::new(),
            stat_updates: Vec::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Records a constant input.
    pub fn input(&mut self, x: Tensor<T>) -> Var {
        self.push(x, Op::Input, false)
    }

    /// Records an input whose gradient [`Graph::backward`] should report.
    pub fn input_with_grad(&mut self, x: Tensor<T>) -> Var {
        self.push(x, Op::Input, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Batch statistics gathered by training-mode batch norms.
    pub fn running_stat_updates(&self) -> &[RunningStatUpdate<T>] {
        &self.stat_updates
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn param_trainable(&self, id: ParamId) -> bool {
        self.params.entry(id).trainable
    }

    /// Propagates `seeds` (gradients of a scalar objective with respect to
    /// recorded values) back through the tape.
    pub fn backward(&self, seeds: Vec<(Var, Tensor<T>)>) -> Result<Gradients<T>> {
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut pgrads: Vec<Option<Tensor<T>>> = (0..self.params.len()).map(|_| None).collect();
        for (v, g) in seeds {
            if g.shape() != self.nodes[v.0].value.shape() {
                bail!(
                    Shape,
                    "seed gradient {:?} does not match value {:?}",
                    g.shape(),
                    self.nodes[v.0].value.shape()
                );
            }
            accumulate(&mut grads[v.0], g);
        }
        for idx in (0..self.nodes.len()).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Input) {
                continue;
            }
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            match &node.op {
                Op::Input => unreachable!(),
                Op::Conv2d { x, w, b } => {
                    let xv = &self.nodes[x.0].value;
                    let wv = self.params.get(*w);
                    let mut dw = Tensor::zeros(wv.shape());
                    let mut db = b.map(|b| Tensor::zeros(self.params.get(b).shape()));
                    let dx = kernels::conv2d_backward(xv, wv, &dy, &mut dw, db.as_mut(), self.needs(*x));
                    if self.param_trainable(*w) {
                        accumulate(&mut pgrads[w.0], dw);
                    }
                    if let (Some(b), Some(db)) = (b, db) {
                        if self.param_trainable(*b) {
                            accumulate(&mut pgrads[b.0], db);
                        }
                    }
                    if let Some(dx) = dx {
                        accumulate(&mut grads[x.0], dx);
                    }
                }
                Op::ConvTranspose2d { x, w, b, stride, pad } => {
                    let xv = &self.nodes[x.0].value;
                    let wv = self.params.get(*w);
                    let mut dw = Tensor::zeros(wv.shape());
                    let mut db = b.map(|b| Tensor::zeros(self.params.get(b).shape()));
                    let dx = kernels::conv_transpose2d_backward(
                        xv,
                        wv,
                        &dy,
                        *stride,
                        *pad,
                        &mut dw,
                        db.as_mut(),
                        self.needs(*x),
                    );
                    if self.param_trainable(*w) {
                        accumulate(&mut pgrads[w.0], dw);
                    }
                    if let (Some(b), Some(db)) = (b, db) {
                        if self.param_trainable(*b) {
                            accumulate(&mut pgrads[b.0], db);
                        }
                    }
                    if let Some(dx) = dx {
                        accumulate(&mut grads[x.0], dx);
                    }
                }
                Op::BatchNorm { x, ids, mean, inv_std, batch_mode } => {
                    let xv = &self.nodes[x.0].value;
                    let gamma = self.params.get(ids.gamma);
                    let mut dgamma = vec![T::zero(); gamma.len()];
                    let mut dbeta = vec![T::zero(); gamma.len()];
                    let dx = kernels::normalize_backward(
                        xv,
                        &dy,
                        mean,
                        inv_std,
                        gamma.data(),
                        *batch_mode,
                        &mut dgamma,
                        &mut dbeta,
                    );
                    let shape = gamma.shape();
                    if self.param_trainable(ids.gamma) {
                        accumulate(&mut pgrads[ids.gamma.0], Tensor::from_vec(shape, dgamma)?);
                    }
                    if self.param_trainable(ids.beta) {
                        accumulate(&mut pgrads[ids.beta.0], Tensor::from_vec(shape, dbeta)?);
                    }
                    if self.needs(*x) {
                        accumulate(&mut grads[x.0], dx);
                    }
                }
                Op::Relu(x) => {
                    if self.needs(*x) {
                        accumulate(&mut grads[x.0], kernels::relu_backward(&node.value, &dy));
                    }
                }
                Op::Sigmoid(x) => {
                    if self.needs(*x) {
                        accumulate(&mut grads[x.0], kernels::sigmoid_backward(&node.value, &dy));
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[a.0], dy.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads[b.0], dy);
                    }
                }
                Op::Concat(xs) => {
                    let channels: Vec<usize> = xs.iter().map(|x| self.nodes[x.0].value.channels()).collect();
                    for (x, g) in xs.iter().zip(kernels::concat_backward(&dy, &channels)) {
                        if self.needs(*x) {
                            accumulate(&mut grads[x.0], g);
                        }
                    }
                }
                Op::CenterCrop(x) => {
                    if self.needs(*x) {
                        let shape = self.nodes[x.0].value.shape();
                        accumulate(&mut grads[x.0], kernels::center_crop_backward(shape, &dy));
                    }
                }
                Op::Pool(x, kind) => {
                    if self.needs(*x) {
                        let xv = &self.nodes[x.0].value;
                        accumulate(&mut grads[x.0], kernels::pool2_backward(xv, &dy, *kind));
                    }
                }
            }
        }
        Ok(Gradients { nodes: grads, params: pgrads })
    }
}

impl<T: Real> Ops<T> for Graph<'_, T> {
    type H = Var;

    fn params(&self) -> &ParamStore<T> {
        self.params
    }

    fn shape(&self, x: &Var) -> [usize; 4] {
        self.nodes[x.0].value.shape()
    }

    fn conv2d(&mut self, x: &Var, w: ParamId, b: Option<ParamId>) -> Var {
        let value = kernels::conv2d(&self.nodes[x.0].value, self.params.get(w), b.map(|b| self.params.get(b)));
        let rg = self.needs(*x) || self.param_trainable(w) || b.is_some_and(|b| self.param_trainable(b));
        self.push(value, Op::Conv2d { x: *x, w, b }, rg)
    }

    fn conv_transpose2d(&mut self, x: &Var, w: ParamId, b: Option<ParamId>, stride: usize, pad: usize) -> Var {
        let value = kernels::conv_transpose2d(
            &self.nodes[x.0].value,
            self.params.get(w),
            b.map(|b| self.params.get(b)),
            stride,
            pad,
        );
        let rg = self.needs(*x) || self.param_trainable(w) || b.is_some_and(|b| self.param_trainable(b));
        self.push(value, Op::ConvTranspose2d { x: *x, w, b, stride, pad }, rg)
    }

    fn batch_norm(&mut self, x: &Var, bn: &BatchNormIds) -> Var {
        let xv = &self.nodes[x.0].value;
        let (mean, inv_std, batch_mode) = match self.mode {
            Mode::Train => {
                let stats = kernels::batch_stats(xv, T::from_f64(BN_EPS));
                let n = stats.count as f64;
                let correction = T::from_f64(if n > 1.0 { n / (n - 1.0) } else { 1.0 });
                self.stat_updates.push(RunningStatUpdate {
                    running_mean: bn.running_mean,
                    running_var: bn.running_var,
                    batch_mean: stats.mean.clone(),
                    batch_var: stats.var.iter().map(|&v| v * correction).collect(),
                });
                (stats.mean, stats.inv_std, true)
            }
            Mode::Eval => {
                let (m, s) = eval_norm(self.params, bn);
                (m, s, false)
            }
        };
        let value = kernels::normalize(
            xv,
            &mean,
            &inv_std,
            self.params.get(bn.gamma).data(),
            self.params.get(bn.beta).data(),
        );
        let rg = self.needs(*x) || self.param_trainable(bn.gamma) || self.param_trainable(bn.beta);
        self.push(
            value,
            Op::BatchNorm {
                x: *x,
                ids: *bn,
                mean,
                inv_std,
                batch_mode,
            },
            rg,
        )
    }

    fn relu(&mut self, x: &Var) -> Var {
        let value = kernels::relu(&self.nodes[x.0].value);
        let rg = self.needs(*x);
        self.push(value, Op::Relu(*x), rg)
    }

    fn sigmoid(&mut self, x: &Var) -> Var {
        let value = kernels::sigmoid(&self.nodes[x.0].value);
        let rg = self.needs(*x);
        self.push(value, Op::Sigmoid(*x), rg)
    }

    fn add(&mut self, a: &Var, b: &Var) -> Var {
        let value = kernels::add(&self.nodes[a.0].value, &self.nodes[b.0].value);
        let rg = self.needs(*a) || self.needs(*b);
        self.push(value, Op::Add(*a, *b), rg)
    }

    fn concat(&mut self, xs: &[Var]) -> Var {
        let refs: Vec<&Tensor<T>> = xs.iter().map(|x| &self.nodes[x.0].value).collect();
        let value = kernels::concat(&refs);
        let rg = xs.iter().any(|x| self.needs(*x));
        self.push(value, Op::Concat(xs.to_vec()), rg)
    }

    fn center_crop(&mut self, x: &Var, height: usize, width: usize) -> Var {
        let xv = &self.nodes[x.0].value;
        if xv.height() == height && xv.width() == width {
            return *x;
        }
        let value = kernels::center_crop(xv, height, width);
        let rg = self.needs(*x);
        self.push(value, Op::CenterCrop(*x), rg)
    }

    fn pool2(&mut self, x: &Var, kind: PoolKind) -> Var {
        let value = kernels::pool2(&self.nodes[x.0].value, kind);
        let rg = self.needs(*x);
        self.push(value, Op::Pool(*x, kind), rg)
    }
}
