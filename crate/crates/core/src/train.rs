//! One optimization step of the generator.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;

use crate::autograd::{Graph, Mode, Ops, RunningStatUpdate};
use crate::dataset::PairedSample;
use crate::error::{bail, Result};
use crate::extractor::FeatureExtractor;
use crate::image::{ImageTensor, SaliencyMap};
use crate::losses::{total_objective_grad, LossBreakdown, LossWeights, Predicted, Targets};
use crate::model::DeepSesr;
use crate::optim::Adam;
use crate::real::Real;
use crate::tensor::Tensor;

/// Which heads receive a training signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepKind {
    #[default]
    Full,
    /// SESR head skipped; only LR terms are attached.
    EnhanceOnly,
}

fn seed_tensor<T: Real>(shape: [usize; 4], per_item: &[Vec<f64>]) -> Result<Tensor<T>> {
    let data = per_item.iter().flatten().map(|&v| T::from_f64(v)).collect();
    Tensor::from_vec(shape, data)
}

/// Batch-mean loss, per-parameter gradients and batch-norm statistics of
/// one training-mode forward pass.
pub struct Computed<T> {
    pub loss: LossBreakdown,
    pub grads: Vec<Option<Tensor<T>>>,
    pub stats: Vec<RunningStatUpdate<T>>,
}

/// Forward pass in training mode, loss evaluation and backpropagation.
///
/// The model is not modified.
pub fn compute_gradients<T: Real>(
    model: &DeepSesr<T>,
    batch: &[&PairedSample],
    weights: &LossWeights,
    extractor: &dyn FeatureExtractor,
    kind: StepKind,
) -> Result<Computed<T>> {
    if batch.is_empty() {
        bail!(Argument, "empty batch");
    }
    let (th, tw) = batch[0].y.dims();
    if batch.iter().any(|s| s.y.dims() != (th, tw)) {
        bail!(Argument, "all samples of a batch must share one size");
    }
    let xs: Vec<Tensor<T>> = batch.iter().map(|s| s.x.to_tensor()).collect();
    let mut g = Graph::new(model.params(), Mode::Train);
    let x = g.input(Tensor::stack(&xs)?);
    let out = match kind {
        StepKind::Full => model.forward(&mut g, &x, Some((th, tw)))?,
        StepKind::EnhanceOnly => model.forward_enhance_only(&mut g, &x)?,
    };

    let n = batch.len();
    let mut parts = Vec::with_capacity(n);
    let (mut gs, mut ge, mut gy) = (Vec::new(), Vec::new(), Vec::new());
    for (i, sample) in batch.iter().enumerate() {
        let s_hat = out.saliency.map(|s| SaliencyMap::from_tensor(g.value(s), i)).transpose()?;
        let e_hat = ImageTensor::from_tensor(g.value(out.enhanced), i)?;
        let y_hat = out.sesr.map(|y| ImageTensor::from_tensor(g.value(y), i)).transpose()?;
        let pred = Predicted {
            saliency: s_hat.as_ref(),
            enhanced: &e_hat,
            sesr: y_hat.as_ref(),
        };
        let tgt = Targets {
            saliency: sample.s.as_ref(),
            enhanced: &sample.e,
            sesr: &sample.y,
        };
        let (loss, grads) = total_objective_grad(&pred, &tgt, weights, extractor)?;
        if !loss.total.is_finite() {
            bail!(NonFinite, "loss became non-finite ({})", loss.total);
        }
        parts.push(loss);
        let scale = 1.0 / n as f64;
        let mean = |v: Vec<f64>| v.into_iter().map(|x| x * scale).collect::<Vec<_>>();
        ge.push(mean(grads.enhanced));
        if let Some(v) = grads.saliency {
            gs.push(mean(v));
        }
        if let Some(v) = grads.sesr {
            gy.push(mean(v));
        }
    }

    let mut seeds = alloc::vec![(out.enhanced, seed_tensor(g.shape(&out.enhanced), &ge)?)];
    if let Some(s) = out.saliency {
        seeds.push((s, seed_tensor(g.shape(&s), &gs)?));
    }
    if let Some(y) = out.sesr {
        seeds.push((y, seed_tensor(g.shape(&y), &gy)?));
    }
    let grads = g.backward(seeds)?;
    let stats = g.running_stat_updates().to_vec();
    Ok(Computed {
        loss: LossBreakdown::mean(&parts),
        grads: grads.into_param_grads(),
        stats,
    })
}

/// Rescales gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before rescaling.
pub fn clip_grad_norm<T: Real>(grads: &mut [Option<Tensor<T>>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flatten()
        .flat_map(|g| g.data())
        .map(|v| v.as_f64() * v.as_f64())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let k = T::from_f64(max_norm / norm);
        for g in grads.iter_mut().flatten() {
            g.data_mut().iter_mut().for_each(|v| *v *= k);
        }
    }
    norm
}

/// Computes gradients for `batch` and applies one Adam update along with
/// the batch-norm running statistics.
///
/// On a non-finite loss or gradient the model and optimizer are untouched.
pub fn train_step<T: Real>(
    model: &mut DeepSesr<T>,
    adam: &mut Adam<T>,
    batch: &[&PairedSample],
    weights: &LossWeights,
    extractor: &dyn FeatureExtractor,
    kind: StepKind,
    grad_clip_norm: Option<f64>,
) -> Result<LossBreakdown> {
    let mut c = compute_gradients(model, batch, weights, extractor, kind)?;
    if let Some(max) = grad_clip_norm {
        clip_grad_norm(&mut c.grads, max);
    }
    adam.step(model.params_mut(), &c.grads)?;
    model.params_mut().apply_running_stats(&c.stats);
    Ok(c.loss)
}
