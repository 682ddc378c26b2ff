//! Training configuration and its flat TOML form.
//!
//! Every key is optional; omitted keys take the defaults below.
//!
//! ```toml
//! learning_rate = 1e-4
//! adam_beta1 = 0.5
//! adam_beta2 = 0.999
//! adam_eps = 1e-8
//! batch_size = 2
//! max_epochs = 26
//! max_steps = 0            # 0: no step limit
//! seed = 0
//! checkpoint_every = 0     # steps; 0: final checkpoint only
//! validate_every = 0       # steps; 0: no periodic validation
//! grad_clip_norm = 0.0     # 0: off
//! content_extractor = "vgg19"   # or "random", "identity"
//! vgg19_weights = ""       # tensor file with conv1_1 .. conv5_4
//! extractor_seed = 0
//! lambda_s_aan = 1.0
//! lambda_c_lr = 1.0
//! lambda_f_lr = 0.1
//! lambda_t_lr = 0.5
//! lambda_c_hr = 1.0
//! lambda_f_hr = 0.1
//! lambda_g_hr = 0.5
//! scale = 2
//! fenet_variant = "2d"
//! rdb_stage1_count = 8
//! rdb_stage2_count = 4
//! rdb_growth = 64
//! fenet_out_channels = 32
//! head_channels = 64
//! use_aan = true
//! model_seed = 0
//! ```

use std::path::{Path, PathBuf};

use deep_sesr_core::extractor::{ConvStack, FeatureExtractor, Identity};
use deep_sesr_core::image::Scale;
use deep_sesr_core::losses::LossWeights;
use deep_sesr_core::model::{FenetVariant, ModelConfig};
use deep_sesr_core::optim::AdamConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Vgg19,
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: u64,
    /// Stop after this many optimizer steps; 0 means no limit.
    pub max_steps: u64,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub validate_every: u64,
    pub grad_clip_norm: f64,
    pub content_extractor: ExtractorKind,
    pub vgg19_weights: Option<PathBuf>,
    pub extractor_seed: u64,
    pub loss_weights: LossWeights,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 2,
            max_epochs: 26,
            max_steps: 0,
            seed: 0,
            checkpoint_every: 0,
            validate_every: 0,
            grad_clip_norm: 0.0,
            content_extractor: ExtractorKind::Vgg19,
            vgg19_weights: None,
            extractor_seed: 0,
            loss_weights: LossWeights::default(),
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        self.loss_weights.validate()?;
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(deep_sesr_core::Error::Config("batch_size must be at least 1".into()).into());
        }
        if !(self.grad_clip_norm >= 0.0) {
            return Err(deep_sesr_core::Error::Config("grad_clip_norm must be non-negative".into()).into());
        }
        Ok(())
    }

    pub fn grad_clip(&self) -> Option<f64> {
        (self.grad_clip_norm > 0.0).then_some(self.grad_clip_norm)
    }

    /// Instantiates the content-loss feature extractor.
    pub fn extractor(&self) -> Result<Box<dyn FeatureExtractor>> {
        match self.content_extractor {
            ExtractorKind::Identity => Ok(Box::new(Identity)),
            ExtractorKind::Random => Ok(Box::new(ConvStack::random(self.extractor_seed))),
            ExtractorKind::Vgg19 => {
                let missing = |what: String| {
                    Error::from(deep_sesr_core::Error::Config(format!(
                        "VGG-19 weights unavailable ({what}); provide `vgg19_weights` or set \
                         content_extractor = \"random\" to use the seeded random convolutional stack"
                    )))
                };
                let path = self.vgg19_weights.as_ref().ok_or_else(|| missing("no path configured".into()))?;
                if !path.exists() {
                    return Err(missing(format!("{} does not exist", path.display())));
                }
                let (_, tensors): (serde_json::Value, _) = crate::tensorfile::read_file(path)?;
                let tensors: Vec<_> = tensors.into_iter().map(|(n, t)| (n, t.cast::<f64>())).collect();
                Ok(Box::new(ConvStack::vgg19(&tensors)?))
            }
        }
    }

    /// Parses the flat TOML form; unknown keys are reported together.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| deep_sesr_core::Error::Config(e.message().to_string()))?;
        let unknown: Vec<&str> = table.keys().map(String::as_str).filter(|k| !KEYS.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(deep_sesr_core::Error::Config(format!("unknown configuration keys: {}", unknown.join(", "))).into());
        }
        let flat: Flat = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| deep_sesr_core::Error::Config(e.message().to_string()))?;
        let cfg = flat.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&Flat::from_config(self)).expect("flat config serializes")
    }
}

const KEYS: &[&str] = &[
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "batch_size",
    "max_epochs",
    "max_steps",
    "seed",
    "checkpoint_every",
    "validate_every",
    "grad_clip_norm",
    "content_extractor",
    "vgg19_weights",
    "extractor_seed",
    "lambda_s_aan",
    "lambda_c_lr",
    "lambda_f_lr",
    "lambda_t_lr",
    "lambda_c_hr",
    "lambda_f_hr",
    "lambda_g_hr",
    "scale",
    "fenet_variant",
    "rdb_stage1_count",
    "rdb_stage2_count",
    "rdb_growth",
    "fenet_out_channels",
    "head_channels",
    "use_aan",
    "model_seed",
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct Flat {
    learning_rate: f64,
    adam_beta1: f64,
    adam_beta2: f64,
    adam_eps: f64,
    batch_size: usize,
    max_epochs: u64,
    max_steps: u64,
    seed: u64,
    checkpoint_every: u64,
    validate_every: u64,
    grad_clip_norm: f64,
    content_extractor: ExtractorKind,
    vgg19_weights: String,
    extractor_seed: u64,
    lambda_s_aan: f64,
    lambda_c_lr: f64,
    lambda_f_lr: f64,
    lambda_t_lr: f64,
    lambda_c_hr: f64,
    lambda_f_hr: f64,
    lambda_g_hr: f64,
    scale: u32,
    fenet_variant: FenetVariant,
    rdb_stage1_count: usize,
    rdb_stage2_count: usize,
    rdb_growth: usize,
    fenet_out_channels: usize,
    head_channels: usize,
    use_aan: bool,
    model_seed: u64,
}

impl Default for Flat {
    fn default() -> Self {
        Flat::from_config(&TrainConfig::default())
    }
}

impl Flat {
    fn from_config(c: &TrainConfig) -> Self {
        let w = &c.loss_weights;
        let m = &c.model;
        Flat {
            learning_rate: c.learning_rate,
            adam_beta1: c.adam_beta1,
            adam_beta2: c.adam_beta2,
            adam_eps: c.adam_eps,
            batch_size: c.batch_size,
            max_epochs: c.max_epochs,
            max_steps: c.max_steps,
            seed: c.seed,
            checkpoint_every: c.checkpoint_every,
            validate_every: c.validate_every,
            grad_clip_norm: c.grad_clip_norm,
            content_extractor: c.content_extractor,
            vgg19_weights: c.vgg19_weights.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            extractor_seed: c.extractor_seed,
            lambda_s_aan: w.lambda_s_aan,
            lambda_c_lr: w.lambda_c_lr,
            lambda_f_lr: w.lambda_f_lr,
            lambda_t_lr: w.lambda_t_lr,
            lambda_c_hr: w.lambda_c_hr,
            lambda_f_hr: w.lambda_f_hr,
            lambda_g_hr: w.lambda_g_hr,
            scale: m.scale.get() as u32,
            fenet_variant: m.fenet_variant,
            rdb_stage1_count: m.rdb_stage1_count,
            rdb_stage2_count: m.rdb_stage2_count,
            rdb_growth: m.rdb_growth,
            fenet_out_channels: m.fenet_out_channels,
            head_channels: m.head_channels,
            use_aan: m.use_aan,
            model_seed: m.seed,
        }
    }

    fn into_config(self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            max_steps: self.max_steps,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            validate_every: self.validate_every,
            grad_clip_norm: self.grad_clip_norm,
            content_extractor: self.content_extractor,
            vgg19_weights: (!self.vgg19_weights.is_empty()).then(|| PathBuf::from(self.vgg19_weights)),
            extractor_seed: self.extractor_seed,
            loss_weights: LossWeights {
                lambda_s_aan: self.lambda_s_aan,
                lambda_c_lr: self.lambda_c_lr,
                lambda_f_lr: self.lambda_f_lr,
                lambda_t_lr: self.lambda_t_lr,
                lambda_c_hr: self.lambda_c_hr,
                lambda_f_hr: self.lambda_f_hr,
                lambda_g_hr: self.lambda_g_hr,
            },
            model: ModelConfig {
                scale: Scale::new(self.scale).map_err(|_| {
                    deep_sesr_core::Error::Config(format!("scale must be 2, 3 or 4, got {}", self.scale))
                })?,
                fenet_variant: self.fenet_variant,
                rdb_stage1_count: self.rdb_stage1_count,
                rdb_stage2_count: self.rdb_stage2_count,
                rdb_growth: self.rdb_growth,
                fenet_out_channels: self.fenet_out_channels,
                head_channels: self.head_channels,
                use_aan: self.use_aan,
                seed: self.model_seed,
            },
        })
    }
}
