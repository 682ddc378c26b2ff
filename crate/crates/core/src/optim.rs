//! Adam with bias correction.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::autograd::ParamStore;
use crate::error::{bail, Result};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bail!(Config, "learning rate must be positive, got {}", self.lr);
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                bail!(Config, "{} must lie in [0, 1), got {}", name, b);
            }
        }
        if !(self.eps > 0.0) {
            bail!(Config, "eps must be positive, got {}", self.eps);
        }
        Ok(())
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    /// Updates applied to this tensor so far.
    pub steps: u64,
}

/// Optimizer state aligned with a [`ParamStore`]; untrainable entries
/// carry no moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    state: Vec<Option<Moments<T>>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &ParamStore<T>) -> Self {
        let state = params
            .entries()
            .iter()
            .map(|e| {
                e.trainable.then(|| Moments {
                    m: Tensor::zeros(e.value.shape()),
                    v: Tensor::zeros(e.value.shape()),
                    steps: 0,
                })
            })
            .collect();
        Adam { config, state }
    }

    pub fn state(&self) -> &[Option<Moments<T>>] {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut [Option<Moments<T>>] {
        &mut self.state
    }

    /// One update. Parameters without a gradient are left untouched.
    ///
    /// Every gradient is checked before anything is modified, so a
    /// non-finite value leaves both the parameters and the moments intact.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &[Option<Tensor<T>>]) -> Result<()> {
        if grads.len() != params.len() || self.state.len() != params.len() {
            bail!(
                Shape,
                "optimizer tracks {} tensors, store has {}, got {} gradients",
                self.state.len(),
                params.len(),
                grads.len()
            );
        }
        for (entry, g) in params.entries().iter().zip(grads) {
            if let Some(g) = g {
                if g.shape() != entry.value.shape() {
                    bail!(Shape, "gradient for `{}` has shape {:?}, expected {:?}", entry.name, g.shape(), entry.value.shape());
                }
                if !g.all_finite() {
                    bail!(NonFinite, "non-finite gradient for `{}`", entry.name);
                }
            }
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        for ((entry, g), state) in params.entries_mut().iter_mut().zip(grads).zip(&mut self.state) {
            let (Some(g), Some(st)) = (g, state.as_mut()) else {
                continue;
            };
            st.steps += 1;
            let t = st.steps as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let theta = entry.value.data_mut();
            let (m, v) = (st.m.data_mut(), st.v.data_mut());
            for i in 0..theta.len() {
                let gi = g.data()[i].as_f64();
                let mi = beta1 * m[i].as_f64() + (1.0 - beta1) * gi;
                let vi = beta2 * v[i].as_f64() + (1.0 - beta2) * gi * gi;
                m[i] = T::from_f64(mi);
                v[i] = T::from_f64(vi);
                let update = lr * (mi / c1) / ((vi / c2).sqrt() + eps);
                theta[i] = T::from_f64(theta[i].as_f64() - update);
            }
        }
        Ok(())
    }
}
