//! Model and optimizer snapshots in the tensor container format.
//!
//! Tensor order: every model tensor in layout order (BN running statistics
//! included), then `adam.m/<name>` and `adam.v/<name>` for each trainable
//! tensor when optimizer state is present.

use std::path::Path;

use deep_sesr_core::losses::LossWeights;
use deep_sesr_core::model::{DeepSesr, ModelConfig};
use deep_sesr_core::optim::{Adam, AdamConfig, Moments};
use deep_sesr_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::tensorfile;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub config: AdamConfig,
    /// Update counts of the trainable tensors, in layout order.
    pub steps: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    config: ModelConfig,
    loss_weights: LossWeights,
    train: Option<TrainConfig>,
    step: u64,
    optimizer: Option<OptimizerMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub loss_weights: LossWeights,
    /// Present for checkpoints written by the trainer; needed to resume.
    pub train: Option<TrainConfig>,
    pub step: u64,
    pub weights: Vec<(String, Tensor<f32>)>,
    pub optimizer: Option<(OptimizerMeta, Vec<(Tensor<f32>, Tensor<f32>)>)>,
}

impl Checkpoint {
    pub fn from_model(model: &DeepSesr<f32>, loss_weights: LossWeights) -> Self {
        Checkpoint {
            config: model.config().clone(),
            loss_weights,
            train: None,
            step: 0,
            weights: model
                .params()
                .entries()
                .iter()
                .map(|e| (e.name.clone(), e.value.clone()))
                .collect(),
            optimizer: None,
        }
    }

    pub fn with_optimizer(mut self, adam: &Adam<f32>) -> Self {
        let trained: Vec<&Moments<f32>> = adam.state().iter().flatten().collect();
        self.optimizer = Some((
            OptimizerMeta {
                config: adam.config,
                steps: trained.iter().map(|m| m.steps).collect(),
            },
            trained.iter().map(|m| (m.m.clone(), m.v.clone())).collect(),
        ));
        self
    }

    /// Rebuilds the model, checking names and shapes against the layout.
    pub fn model(&self) -> Result<DeepSesr<f32>> {
        let mut model = DeepSesr::init(&self.config)?;
        model.load_tensors(&self.weights)?;
        if let Some((name, _)) = self.weights.iter().find(|(_, t)| !t.all_finite()) {
            return Err(deep_sesr_core::Error::Format(format!("tensor `{name}` holds non-finite values")).into());
        }
        Ok(model)
    }

    /// Optimizer state for `model`, or a fresh one when none was saved.
    pub fn optimizer_for(&self, model: &DeepSesr<f32>, fallback: AdamConfig) -> Result<Adam<f32>> {
        let Some((meta, moments)) = &self.optimizer else {
            return Ok(Adam::new(fallback, model.params()));
        };
        let mut adam = Adam::new(meta.config, model.params());
        let slots: Vec<&mut Moments<f32>> = adam.state_mut().iter_mut().flatten().collect();
        if slots.len() != moments.len() || slots.len() != meta.steps.len() {
            return Err(deep_sesr_core::Error::Format(format!(
                "optimizer state covers {} tensors, model has {} trainable",
                moments.len(),
                slots.len()
            ))
            .into());
        }
        for ((slot, (m, v)), &steps) in slots.into_iter().zip(moments).zip(&meta.steps) {
            if m.shape() != slot.m.shape() || v.shape() != slot.v.shape() {
                return Err(deep_sesr_core::Error::Format("optimizer moment shape mismatch".into()).into());
            }
            slot.m = m.clone();
            slot.v = v.clone();
            slot.steps = steps;
        }
        Ok(adam)
    }

    fn tensors(&self) -> Vec<(String, Tensor<f32>)> {
        let mut out = self.weights.clone();
        if let Some((_, moments)) = &self.optimizer {
            let trainable = DeepSesr::<f32>::init(&self.config)
                .map(|m| {
                    m.params()
                        .entries()
                        .iter()
                        .filter(|e| e.trainable)
                        .map(|e| e.name.clone())
                        .collect::<Vec<_>>()
                })
                .unwrap_or_default();
            for (name, (m, _)) in trainable.iter().zip(moments) {
                out.push((format!("adam.m/{name}"), m.clone()));
            }
            for (name, (_, v)) in trainable.iter().zip(moments) {
                out.push((format!("adam.v/{name}"), v.clone()));
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = Meta {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            loss_weights: self.loss_weights,
            train: self.train.clone(),
            step: self.step,
            optimizer: self.optimizer.as_ref().map(|(m, _)| m.clone()),
        };
        tensorfile::encode(&meta, &self.tensors())
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let (raw, tensors): (serde_json::Value, _) = tensorfile::decode(bytes, path)?;
        let version = raw.get("format_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(FORMAT_VERSION)) {
            return Err(deep_sesr_core::Error::Format(format!(
                "{}: checkpoint format version {:?}, expected {}",
                path.display(),
                version,
                FORMAT_VERSION
            ))
            .into());
        }
        let meta: Meta = serde_json::from_value(raw).map_err(|e| Error::invalid(path, format!("checkpoint header: {e}")))?;
        let n_weights = tensors.iter().take_while(|(n, _)| !n.starts_with("adam.")).count();
        let mut tensors = tensors.into_iter();
        let weights: Vec<_> = tensors.by_ref().take(n_weights).collect();
        let rest: Vec<_> = tensors.collect();
        let optimizer = match meta.optimizer {
            None if rest.is_empty() => None,
            None => return Err(Error::invalid(path, "optimizer tensors without optimizer header")),
            Some(om) => {
                let half = rest.len() / 2;
                if rest.len() % 2 != 0 || half != om.steps.len() {
                    return Err(Error::invalid(path, "optimizer tensors do not match the header"));
                }
                let (ms, vs) = rest.split_at(half);
                let pairs = ms.iter().zip(vs).map(|((_, m), (_, v))| (m.clone(), v.clone())).collect();
                Some((om, pairs))
            }
        };
        Ok(Checkpoint {
            config: meta.config,
            loss_weights: meta.loss_weights,
            train: meta.train,
            step: meta.step,
            weights,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
