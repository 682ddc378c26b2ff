//! The SESR generator: residual dense blocks (RDBs) stacked into a
//! two-stage feature extractor (FENet), an auxiliary attention head for
//! saliency, an LR enhancement head and a transposed-convolution SESR head.
//!
//! ```text
//! x ─► FENet ─┬─► AAN ─────────────────────────► Ŝ  (H x W x 1)
//!             ├─► conv3x3 ─► sigmoid ───────────► Ê  (H x W x 3)
//!             └─► conv3x3 ─► deconv(s) ─► conv3x3 ─► sigmoid ─► Ŷ (sH x sW x 3)
//! ```

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autograd::{BatchNormIds, Eager, Ops, ParamId, ParamStore};
use crate::error::{bail, Result};
use crate::image::{seeded_rng, ImageTensor, SaliencyMap, Scale};
use crate::real::Real;
use crate::tensor::Tensor;

/// Smallest spatial extent the network accepts.
pub const MIN_INPUT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FenetVariant {
    /// Single branch of 3x3 RDBs.
    #[serde(rename = "1d")]
    OneD,
    /// Parallel 3x3 and 5x5 RDB branches.
    #[serde(rename = "2d")]
    TwoD,
}

impl FenetVariant {
    fn kernels(self) -> &'static [usize] {
        match self {
            FenetVariant::OneD => &[3],
            FenetVariant::TwoD => &[3, 5],
        }
    }
}

impl core::str::FromStr for FenetVariant {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" | "FENet-1d" => Ok(FenetVariant::OneD),
            "2d" | "FENet-2d" => Ok(FenetVariant::TwoD),
            _ => bail!(Argument, "FENet variant must be `1d` or `2d`, got `{}`", s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub scale: Scale,
    pub fenet_variant: FenetVariant,
    /// RDBs per first-stage branch.
    pub rdb_stage1_count: usize,
    /// RDBs in the shared second stage.
    pub rdb_stage2_count: usize,
    /// Filters per RDB conv layer; also the RDB feature width.
    pub rdb_growth: usize,
    pub fenet_out_channels: usize,
    /// Width of the post-FENet convs, the deconvs and the AAN hidden layer.
    pub head_channels: usize,
    pub use_aan: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            scale: Scale::X2,
            fenet_variant: FenetVariant::TwoD,
            rdb_stage1_count: 8,
            rdb_stage2_count: 4,
            rdb_growth: 64,
            fenet_out_channels: 32,
            head_channels: 64,
            use_aan: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rdb_stage1_count", self.rdb_stage1_count),
            ("rdb_stage2_count", self.rdb_stage2_count),
            ("rdb_growth", self.rdb_growth),
            ("fenet_out_channels", self.fenet_out_channels),
            ("head_channels", self.head_channels),
        ] {
            if v == 0 {
                bail!(Config, "{} must be at least 1", name);
            }
        }
        Ok(())
    }

    /// Kernel, stride and padding of each upsampling layer.
    ///
    /// `k = s + 2`, `p = 1` makes every layer multiply extents by exactly `s`.
    pub fn upsampling(&self) -> Vec<(usize, usize, usize)> {
        let strides: &[usize] = match self.scale.get() {
            2 => &[2],
            3 => &[3],
            _ => &[2, 2],
        };
        strides.iter().map(|&s| (s + 2, s, 1)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvIds {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeconvIds {
    pub weight: ParamId,
    pub bias: ParamId,
    pub stride: usize,
    pub pad: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBnIds {
    pub conv: ConvIds,
    pub bn: BatchNormIds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdbIds {
    pub layers: [ConvBnIds; 3],
    pub fusion: ConvIds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchIds {
    pub lift: ConvIds,
    pub blocks: Vec<RdbIds>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FenetIds {
    pub branches: Vec<BranchIds>,
    pub reduce: ConvIds,
    pub blocks: Vec<RdbIds>,
    pub out: ConvIds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AanIds {
    pub hidden: ConvIds,
    pub out: ConvIds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadIds {
    pub enhance: ConvIds,
    pub sr_in: ConvIds,
    pub upsample: Vec<DeconvIds>,
    pub sr_out: ConvIds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub fenet: FenetIds,
    pub aan: Option<AanIds>,
    pub heads: HeadIds,
}

/// Fan-in-scaled normal initialization; `gain` is 2 before a ReLU, 1 otherwise.
struct Builder<T> {
    store: ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> Builder<T> {
    fn normal(&mut self, shape: [usize; 4], std: f64) -> Tensor<T> {
        let len = shape.iter().product();
        let data = (0..len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                T::from_f64(z * std)
            })
            .collect();
        Tensor::from_vec(shape, data).expect("consistent shape")
    }

    fn conv(&mut self, name: &str, cin: usize, cout: usize, k: usize, bias: bool, gain: f64) -> ConvIds {
        let std = (gain / (cin * k * k) as f64).sqrt();
        let w = self.normal([cout, cin, k, k], std);
        let weight = self.store.add(format!("{name}.weight"), w, true);
        let bias = bias.then(|| self.store.add(format!("{name}.bias"), Tensor::zeros([1, cout, 1, 1]), true));
        ConvIds { weight, bias }
    }

    fn deconv(&mut self, name: &str, cin: usize, cout: usize, k: usize, stride: usize, pad: usize) -> DeconvIds {
        // each output pixel sees about (k / stride)^2 taps per input channel
        let fan_in = (cin * k * k) as f64 / (stride * stride) as f64;
        let w = self.normal([cin, cout, k, k], (2.0 / fan_in).sqrt());
        let weight = self.store.add(format!("{name}.weight"), w, true);
        let bias = self.store.add(format!("{name}.bias"), Tensor::zeros([1, cout, 1, 1]), true);
        DeconvIds { weight, bias, stride, pad }
    }

    fn batch_norm(&mut self, name: &str, c: usize) -> BatchNormIds {
        let shape = [1, c, 1, 1];
        BatchNormIds {
            gamma: self.store.add(format!("{name}.gamma"), Tensor::full(shape, T::one()), true),
            beta: self.store.add(format!("{name}.beta"), Tensor::zeros(shape), true),
            running_mean: self.store.add(format!("{name}.running_mean"), Tensor::zeros(shape), false),
            running_var: self.store.add(format!("{name}.running_var"), Tensor::full(shape, T::one()), false),
        }
    }

    fn rdb(&mut self, name: &str, width: usize, growth: usize, k: usize) -> RdbIds {
        let layers = core::array::from_fn(|i| {
            let lname = format!("{name}.conv{i}");
            ConvBnIds {
                conv: self.conv(&lname, width + i * growth, growth, k, false, 2.0),
                bn: self.batch_norm(&format!("{lname}.bn"), growth),
            }
        });
        // scaled-down residual branch keeps deep stacks near identity at init
        let fusion = self.conv(&format!("{name}.fusion"), width + 3 * growth, width, 1, true, 0.1);
        RdbIds { layers, fusion }
    }
}

fn build_layout<T: Real>(config: &ModelConfig) -> (ParamStore<T>, Layout) {
    let mut b = Builder {
        store: ParamStore::new(),
        rng: seeded_rng(config.seed),
    };
    let g = config.rdb_growth;
    let kernels = config.fenet_variant.kernels();
    let branches = kernels
        .iter()
        .map(|&k| {
            let name = format!("fenet.branch{k}x{k}");
            let lift = b.conv(&format!("{name}.lift"), 3, g, k, true, 1.0);
            let blocks = (0..config.rdb_stage1_count)
                .map(|i| b.rdb(&format!("{name}.rdb{i}"), g, g, k))
                .collect();
            BranchIds { lift, blocks }
        })
        .collect();
    let reduce = b.conv("fenet.reduce", g * kernels.len(), g, 1, true, 1.0);
    let blocks = (0..config.rdb_stage2_count)
        .map(|i| b.rdb(&format!("fenet.stage2.rdb{i}"), g, g, 3))
        .collect();
    let out = b.conv("fenet.out", g, config.fenet_out_channels, 3, true, 1.0);
    let f = config.fenet_out_channels;
    let hc = config.head_channels;
    let aan = config.use_aan.then(|| AanIds {
        hidden: b.conv("aan.hidden", f, hc, 3, true, 2.0),
        out: b.conv("aan.out", hc, 1, 3, true, 1.0),
    });
    let enhance = b.conv("head.enhance", f, 3, 3, true, 1.0);
    let sr_in = b.conv("head.sr_in", f, hc, 3, true, 2.0);
    let upsample = config
        .upsampling()
        .into_iter()
        .enumerate()
        .map(|(i, (k, s, p))| b.deconv(&format!("head.up{i}"), hc, hc, k, s, p))
        .collect();
    let sr_out = b.conv("head.sr_out", hc, 3, 3, true, 1.0);
    let layout = Layout {
        fenet: FenetIds {
            branches,
            reduce,
            blocks,
            out,
        },
        aan,
        heads: HeadIds {
            enhance,
            sr_in,
            upsample,
            sr_out,
        },
    };
    (b.store, layout)
}

/// Outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct Outputs<H> {
    pub saliency: Option<H>,
    pub enhanced: H,
    /// Absent for enhance-only passes.
    pub sesr: Option<H>,
}

/// Inference result for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub saliency: Option<SaliencyMap>,
    pub enhanced: ImageTensor,
    pub sesr: Option<ImageTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepSesr<T> {
    config: ModelConfig,
    params: ParamStore<T>,
    layout: Layout,
}

/// Total number of trainable scalars for a configuration.
pub fn count_params(config: &ModelConfig) -> Result<usize> {
    Ok(DeepSesr::<f32>::init(config)?.params.trainable_count())
}

impl<T: Real> DeepSesr<T> {
    /// Fresh parameters, deterministic in `config.seed`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (params, layout) = build_layout(config);
        Ok(DeepSesr {
            config: config.clone(),
            params,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.params.trainable_count()
    }

    fn conv<O: Ops<T>>(o: &mut O, x: &O::H, c: &ConvIds) -> O::H {
        o.conv2d(x, c.weight, c.bias)
    }

    /// Dense block: each layer sees the block input and all earlier layer
    /// outputs; a 1x1 fusion conv feeds a local residual.
    pub fn rdb_forward<O: Ops<T>>(o: &mut O, x: &O::H, ids: &RdbIds) -> O::H {
        let mut features = alloc::vec![x.clone()];
        for layer in &ids.layers {
            let input = if features.len() == 1 {
                x.clone()
            } else {
                o.concat(&features)
            };
            let y = Self::conv(o, &input, &layer.conv);
            let y = o.batch_norm(&y, &layer.bn);
            let y = o.relu(&y);
            features.push(y);
        }
        let all = o.concat(&features);
        let fused = Self::conv(o, &all, &ids.fusion);
        o.add(x, &fused)
    }

    pub fn fenet_forward<O: Ops<T>>(&self, o: &mut O, x: &O::H) -> O::H {
        let ids = &self.layout.fenet;
        let branch_outputs: Vec<O::H> = ids
            .branches
            .iter()
            .map(|branch| {
                let mut h = Self::conv(o, x, &branch.lift);
                for block in &branch.blocks {
                    h = Self::rdb_forward(o, &h, block);
                }
                h
            })
            .collect();
        let merged = if branch_outputs.len() == 1 {
            branch_outputs[0].clone()
        } else {
            o.concat(&branch_outputs)
        };
        let mut h = Self::conv(o, &merged, &ids.reduce);
        for block in &ids.blocks {
            h = Self::rdb_forward(o, &h, block);
        }
        Self::conv(o, &h, &ids.out)
    }

    pub fn aan_forward<O: Ops<T>>(&self, o: &mut O, features: &O::H) -> Option<O::H> {
        let ids = self.layout.aan.as_ref()?;
        let h = Self::conv(o, features, &ids.hidden);
        let h = o.relu(&h);
        let s = Self::conv(o, &h, &ids.out);
        Some(o.sigmoid(&s))
    }

    fn sesr_head<O: Ops<T>>(&self, o: &mut O, features: &O::H, target: Option<(usize, usize)>) -> O::H {
        let ids = &self.layout.heads;
        let h = Self::conv(o, features, &ids.sr_in);
        let mut h = o.relu(&h);
        for up in &ids.upsample {
            h = o.conv_transpose2d(&h, up.weight, Some(up.bias), up.stride, up.pad);
            h = o.relu(&h);
        }
        let y = Self::conv(o, &h, &ids.sr_out);
        let y = o.sigmoid(&y);
        match target {
            Some((th, tw)) => o.center_crop(&y, th, tw),
            None => y,
        }
    }

    fn check_input(&self, shape: [usize; 4], target: Option<(usize, usize)>) -> Result<()> {
        let [_, c, h, w] = shape;
        if c != 3 {
            bail!(Shape, "network input must have 3 channels, got {}", c);
        }
        if h < MIN_INPUT || w < MIN_INPUT {
            bail!(Shape, "network input must be at least {0}x{0}, got {1}x{2}", MIN_INPUT, w, h);
        }
        if let Some((th, tw)) = target {
            let s = self.config.scale.get();
            if th > s * h || tw > s * w || th + s <= s * h || tw + s <= s * w {
                bail!(
                    Shape,
                    "a {}x{} input upsampled {} cannot be cropped to {}x{}",
                    w,
                    h,
                    self.config.scale,
                    tw,
                    th
                );
            }
        }
        Ok(())
    }

    /// Full pass yielding saliency, enhanced LR and SESR outputs.
    ///
    /// With `target`, the SESR output is center-cropped to that HR size
    /// (needed at 3x when the HR extent is not a multiple of 3).
    pub fn forward<O: Ops<T>>(&self, o: &mut O, x: &O::H, target: Option<(usize, usize)>) -> Result<Outputs<O::H>> {
        self.check_input(o.shape(x), target)?;
        let features = self.fenet_forward(o, x);
        let saliency = self.aan_forward(o, &features);
        let enhanced = Self::conv(o, &features, &self.layout.heads.enhance);
        let enhanced = o.sigmoid(&enhanced);
        let sesr = Some(self.sesr_head(o, &features, target));
        Ok(Outputs {
            saliency,
            enhanced,
            sesr,
        })
    }

    /// The saliency and enhancement branches only; the SESR head is skipped.
    pub fn forward_enhance_only<O: Ops<T>>(&self, o: &mut O, x: &O::H) -> Result<Outputs<O::H>> {
        self.check_input(o.shape(x), None)?;
        let features = self.fenet_forward(o, x);
        let saliency = self.aan_forward(o, &features);
        let enhanced = Self::conv(o, &features, &self.layout.heads.enhance);
        let enhanced = o.sigmoid(&enhanced);
        Ok(Outputs {
            saliency,
            enhanced,
            sesr: None,
        })
    }

    fn predict(&self, x: &ImageTensor, full: bool, target: Option<(usize, usize)>) -> Result<Prediction> {
        let mut eager = Eager::new(&self.params);
        let input = eager.input(x.to_tensor());
        let out = if full {
            self.forward(&mut eager, &input, target)?
        } else {
            self.forward_enhance_only(&mut eager, &input)?
        };
        Ok(Prediction {
            saliency: out.saliency.map(|s| SaliencyMap::from_tensor(&s, 0)).transpose()?,
            enhanced: ImageTensor::from_tensor(&out.enhanced, 0)?,
            sesr: out.sesr.map(|y| ImageTensor::from_tensor(&y, 0)).transpose()?,
        })
    }

    /// Inference-mode full pass on one image.
    pub fn infer(&self, x: &ImageTensor) -> Result<Prediction> {
        self.predict(x, true, None)
    }

    /// As [`infer`](Self::infer), with the SESR output center-cropped to
    /// `(height, width)`.
    pub fn infer_to_size(&self, x: &ImageTensor, target: (usize, usize)) -> Result<Prediction> {
        self.predict(x, true, Some(target))
    }

    /// Inference-mode saliency and enhancement on one image.
    pub fn infer_enhance_only(&self, x: &ImageTensor) -> Result<Prediction> {
        self.predict(x, false, None)
    }

    /// Replaces all tensors from `(name, tensor)` pairs in layout order.
    pub fn load_tensors(&mut self, tensors: &[(String, Tensor<T>)]) -> Result<()> {
        self.params.load_from(tensors)
    }

    /// Converts parameters to another precision (e.g. `f32` to `f64`).
    pub fn cast<U: Real>(&self) -> DeepSesr<U> {
        let (mut params, layout) = build_layout::<U>(&self.config);
        for (dst, src) in params.entries_mut().iter_mut().zip(self.params.entries()) {
            dst.value = src.value.cast();
        }
        DeepSesr {
            config: self.config.clone(),
            params,
            layout,
        }
    }
}
