//! Fixed feature extractors for the content loss.
//!
//! An extractor maps a `[1, 3, H, W]` image to a feature tensor and can pull
//! a feature-space gradient back to pixel space. None of them are trained.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::autograd::{Eager, Graph, Mode, Ops, ParamId, ParamStore};
use crate::error::{bail, Result};
use crate::image::seeded_rng;
use crate::kernels::PoolKind;
use crate::tensor::Tensor;

pub trait FeatureExtractor {
    fn name(&self) -> &str;

    fn features(&self, x: &Tensor<f64>) -> Result<Tensor<f64>>;

    /// Vector-Jacobian product: the gradient with respect to `x` of
    /// `<features(x), d_features>`.
    fn backward(&self, x: &Tensor<f64>, d_features: &Tensor<f64>) -> Result<Tensor<f64>>;
}

/// Passes pixels through unchanged; content loss reduces to plain MSE.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl FeatureExtractor for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn features(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        Ok(x.clone())
    }

    fn backward(&self, _x: &Tensor<f64>, d_features: &Tensor<f64>) -> Result<Tensor<f64>> {
        Ok(d_features.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Conv { weight: ParamId, bias: ParamId },
    Relu,
    Pool(PoolKind),
}

/// A plain feed-forward stack of 3x3 convs, ReLUs and 2x2 pools, with a
/// per-channel affine normalization applied to the input first.
#[derive(Debug, Clone)]
pub struct ConvStack {
    name: String,
    params: ParamStore<f64>,
    layers: Vec<Layer>,
    mean: [f64; 3],
    std: [f64; 3],
}

impl ConvStack {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &ParamStore<f64> {
        &self.params
    }

    /// Seeded random stack with four 2x average pools, so features sit at
    /// 1/16 of the input resolution like the deepest VGG-19 block.
    pub fn random(seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut params = ParamStore::new();
        let mut layers = Vec::new();
        let widths = [3, 8, 8, 16, 16, 16];
        for (i, pair) in widths.windows(2).enumerate() {
            let (cin, cout) = (pair[0], pair[1]);
            let std = (2.0 / (cin * 9) as f64).sqrt();
            let data = (0..cout * cin * 9)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * std
                })
                .collect();
            let w = Tensor::from_vec([cout, cin, 3, 3], data).expect("consistent shape");
            let weight = params.add(format!("conv{i}.weight"), w, false);
            let bias = params.add(format!("conv{i}.bias"), Tensor::zeros([1, cout, 1, 1]), false);
            layers.push(Layer::Conv { weight, bias });
            layers.push(Layer::Relu);
            if i < 4 {
                layers.push(Layer::Pool(PoolKind::Average));
            }
        }
        ConvStack {
            name: format!("random-conv(seed {seed})"),
            params,
            layers,
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    /// VGG-19 up to the ReLU after its last conv layer (`conv5_4`), from
    /// `(name, tensor)` pairs named `conv{block}_{index}.weight` / `.bias`
    /// with weights shaped `[out, in, 3, 3]`.
    ///
    /// Inputs are normalized with the ImageNet channel statistics.
    pub fn vgg19(tensors: &[(String, Tensor<f64>)]) -> Result<Self> {
        const BLOCKS: [(usize, usize); 5] = [(2, 64), (2, 128), (4, 256), (4, 512), (4, 512)];
        let lookup = |name: &str| {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| crate::Error::Format(format!("VGG-19 weights lack tensor `{name}`")))
        };
        let mut params = ParamStore::new();
        let mut layers = Vec::new();
        let mut cin = 3;
        for (b, &(convs, width)) in BLOCKS.iter().enumerate() {
            for i in 0..convs {
                let base = format!("conv{}_{}", b + 1, i + 1);
                let w = lookup(&format!("{base}.weight"))?;
                let bias = lookup(&format!("{base}.bias"))?;
                if w.shape() != [width, cin, 3, 3] {
                    bail!(Format, "`{}.weight` has shape {:?}, expected {:?}", base, w.shape(), [width, cin, 3, 3]);
                }
                if bias.len() != width {
                    bail!(Format, "`{}.bias` has {} values, expected {}", base, bias.len(), width);
                }
                let bias = bias.reshape([1, width, 1, 1])?;
                let weight = params.add(format!("{base}.weight"), w, false);
                let bias = params.add(format!("{base}.bias"), bias, false);
                layers.push(Layer::Conv { weight, bias });
                layers.push(Layer::Relu);
                cin = width;
            }
            if b < 4 {
                layers.push(Layer::Pool(PoolKind::Max));
            }
        }
        Ok(ConvStack {
            name: String::from("vgg19"),
            params,
            layers,
            mean: [0.485, 0.456, 0.406],
            std: [0.229, 0.224, 0.225],
        })
    }

    fn normalize(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        if x.channels() != 3 {
            bail!(Shape, "feature extractor expects 3 channels, got {}", x.channels());
        }
        let mut out = x.clone();
        let plane = x.plane_len();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let c = (i / plane) % 3;
            *v = (*v - self.mean[c]) / self.std[c];
        }
        Ok(out)
    }

    fn run<O: Ops<f64>>(&self, o: &mut O, x: O::H) -> O::H {
        let mut h = x;
        for layer in &self.layers {
            h = match *layer {
                Layer::Conv { weight, bias } => o.conv2d(&h, weight, Some(bias)),
                Layer::Relu => o.relu(&h),
                Layer::Pool(kind) => o.pool2(&h, kind),
            };
        }
        h
    }
}

impl FeatureExtractor for ConvStack {
    fn name(&self) -> &str {
        &self.name
    }

    fn features(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        let mut eager = Eager::new(&self.params);
        let input = eager.input(self.normalize(x)?);
        let out = self.run(&mut eager, input);
        Ok((*out).clone())
    }

    fn backward(&self, x: &Tensor<f64>, d_features: &Tensor<f64>) -> Result<Tensor<f64>> {
        let mut g = Graph::new(&self.params, Mode::Eval);
        let input = g.input_with_grad(self.normalize(x)?);
        let out = self.run(&mut g, input);
        let grads = g.backward(alloc::vec![(out, d_features.clone())])?;
        let mut dx = grads
            .wrt(input)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(x.shape()));
        let plane = x.plane_len();
        for (i, v) in dx.data_mut().iter_mut().enumerate() {
            *v /= self.std[(i / plane) % 3];
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_stack_downsamples_by_16() {
        let stack = ConvStack::random(1);
        let f = stack.features(&Tensor::full([1, 3, 32, 48], 0.5)).unwrap();
        assert_eq!(f.shape(), [1, 16, 2, 3]);
    }

    #[test]
    fn vgg19_reports_missing_tensor() {
        let err = ConvStack::vgg19(&[]).unwrap_err();
        assert!(format!("{err}").contains("conv1_1.weight"));
    }
}
