//! The training loop, validation and the training log.
//!
//! Execution is single-threaded, so runs are bitwise reproducible: the
//! same configuration yields the same loss at every step, and resuming from
//! a checkpoint continues exactly where the uninterrupted run would be.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use deep_sesr_core::dataset::{epoch_batches, PairedSample};
use deep_sesr_core::image::{ImageTensor, Scale};
use deep_sesr_core::losses::LossBreakdown;
use deep_sesr_core::metrics::{MeanStd, MetricReport, UiqmParams};
use deep_sesr_core::model::DeepSesr;
use deep_sesr_core::optim::Adam;
use deep_sesr_core::train::{train_step, StepKind};
use serde_json::{json, Value};

use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::error::{Error, Result};

pub const LOG_FILE: &str = "train_log.ndjson";
pub const FINAL_CHECKPOINT: &str = "final.dsesr";
pub const LAST_GOOD_CHECKPOINT: &str = "last_good.dsesr";

/// JSON number, or `"inf"` / `"-inf"` / `"nan"` for non-finite values.
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn json_stat(s: &MeanStd) -> Value {
    json!({ "mean": json_f64(s.mean), "std": json_f64(s.std) })
}

/// Anything that maps an LR input to `(Ŷ, Ê)`, with Ŷ at the given HR size.
pub trait Predictor {
    fn scale(&self) -> Scale;
    fn predict(&self, x: &ImageTensor, hr_dims: (usize, usize)) -> Result<(ImageTensor, ImageTensor)>;
}

impl Predictor for DeepSesr<f32> {
    fn scale(&self) -> Scale {
        self.config().scale
    }

    fn predict(&self, x: &ImageTensor, hr_dims: (usize, usize)) -> Result<(ImageTensor, ImageTensor)> {
        let p = self.infer_to_size(x, hr_dims)?;
        Ok((p.sesr.expect("full pass"), p.enhanced))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierReport {
    pub psnr: MeanStd,
    pub ssim: MeanStd,
    pub uiqm: MeanStd,
    pub samples: Vec<MetricReport>,
}

impl TierReport {
    fn of(samples: Vec<MetricReport>) -> Self {
        let pick = |f: fn(&MetricReport) -> f64| MeanStd::of(&samples.iter().map(f).collect::<Vec<_>>());
        TierReport {
            psnr: pick(|r| r.psnr),
            ssim: pick(|r| r.ssim),
            uiqm: pick(|r| r.uiqm),
            samples,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "psnr": json_stat(&self.psnr), "ssim": json_stat(&self.ssim), "uiqm": json_stat(&self.uiqm) })
    }
}

/// Mean ± standard deviation of each measure over a set, for Ŷ against Y
/// (`hr`) and Ê against E (`lr`).
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub count: usize,
    pub hr: TierReport,
    pub lr: TierReport,
}

impl ValidationReport {
    pub fn to_json(&self) -> Value {
        json!({ "count": self.count, "hr": self.hr.to_json(), "lr": self.lr.to_json() })
    }

    /// Plain-text table in `mean ± std` form.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>20} {:>20} {:>20}\n", "tier", "PSNR (dB)", "SSIM", "UIQM");
        for (name, t) in [("Y_hat", &self.hr), ("E_hat", &self.lr)] {
            out += &format!(
                "{:<8} {:>20} {:>20} {:>20}\n",
                name,
                t.psnr.to_string(),
                t.ssim.to_string(),
                t.uiqm.to_string()
            );
        }
        out
    }
}

pub fn validate(model: &dyn Predictor, samples: &[PairedSample]) -> Result<ValidationReport> {
    if samples.is_empty() {
        return Err(deep_sesr_core::Error::Argument("validation set is empty".into()).into());
    }
    let params = UiqmParams::default();
    let (mut hr, mut lr) = (Vec::new(), Vec::new());
    for s in samples {
        if s.scale != model.scale() {
            return Err(deep_sesr_core::Error::Argument(format!(
                "sample at {} does not match the {} model",
                s.scale,
                model.scale()
            ))
            .into());
        }
        let (y_hat, e_hat) = model.predict(&s.x, s.y.dims())?;
        hr.push(MetricReport::compute(&y_hat, &s.y, None, &params)?);
        lr.push(MetricReport::compute(&e_hat, &s.e, s.s.as_ref(), &params)?);
    }
    Ok(ValidationReport {
        count: samples.len(),
        hr: TierReport::of(hr),
        lr: TierReport::of(lr),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: u64,
    pub loss: LossBreakdown,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    Step(StepRecord),
    Validation { step: u64, report: ValidationReport },
}

impl LogRecord {
    pub fn to_json(&self) -> Value {
        match self {
            LogRecord::Step(r) => json!({
                "kind": "step",
                "step": r.step,
                "epoch": r.epoch,
                "loss": serde_json::to_value(r.loss).expect("finite losses serialize"),
                "seconds": r.seconds,
            }),
            LogRecord::Validation { step, report } => json!({
                "kind": "validation",
                "step": step,
                "report": report.to_json(),
            }),
        }
    }
}

/// In-memory record of a run; also appended to `train_log.ndjson`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
}

impl TrainLog {
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Step(s) => Some(s),
            _ => None,
        })
    }

    pub fn totals(&self) -> Vec<f64> {
        self.steps().map(|s| s.loss.total).collect()
    }
}

struct LogSink {
    file: Option<(PathBuf, std::fs::File)>,
}

impl LogSink {
    fn open(dir: Option<&Path>) -> Result<Self> {
        let file = match dir {
            None => None,
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join(LOG_FILE);
                let f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?;
                Some((path, f))
            }
        };
        Ok(LogSink { file })
    }

    fn write(&mut self, log: &mut TrainLog, record: LogRecord) -> Result<()> {
        if let Some((path, f)) = self.file.as_mut() {
            writeln!(f, "{}", record.to_json()).map_err(|e| Error::io(path, e))?;
        }
        log.records.push(record);
        Ok(())
    }
}

/// Inputs of one training run.
pub struct TrainRun<'a> {
    pub train: &'a [PairedSample],
    pub val: &'a [PairedSample],
    pub config: &'a TrainConfig,
    /// Where checkpoints and the log go; `None` keeps everything in memory.
    pub out_dir: Option<&'a Path>,
    pub resume: Option<Checkpoint>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: DeepSesr<f32>,
    pub checkpoint: Checkpoint,
    pub log: TrainLog,
}

fn snapshot(model: &DeepSesr<f32>, adam: &Adam<f32>, config: &TrainConfig, step: u64) -> Checkpoint {
    let mut ckpt = Checkpoint::from_model(model, config.loss_weights).with_optimizer(adam);
    ckpt.train = Some(config.clone());
    ckpt.step = step;
    ckpt
}

/// Number of optimizer steps a configuration asks for.
pub fn planned_steps(config: &TrainConfig, samples: usize) -> u64 {
    let per_epoch = (samples / config.batch_size.max(1)) as u64;
    let total = per_epoch * config.max_epochs;
    if config.max_steps > 0 {
        total.min(config.max_steps)
    } else {
        total
    }
}

pub fn train(run: TrainRun) -> Result<TrainOutcome> {
    let cfg = run.config;
    cfg.validate()?;
    if run.train.is_empty() {
        return Err(deep_sesr_core::Error::Argument("training set is empty".into()).into());
    }
    if let Some(s) = run.train.iter().chain(run.val).find(|s| s.scale != cfg.model.scale) {
        return Err(deep_sesr_core::Error::Argument(format!(
            "dataset sample at {} does not match the configured {}",
            s.scale, cfg.model.scale
        ))
        .into());
    }
    let extractor = cfg.extractor()?;
    let (mut model, mut adam, mut step) = match &run.resume {
        Some(ckpt) => {
            if ckpt.config != cfg.model {
                return Err(deep_sesr_core::Error::Config("checkpoint model configuration differs from the run's".into()).into());
            }
            let model = ckpt.model()?;
            let adam = ckpt.optimizer_for(&model, cfg.adam())?;
            (model, adam, ckpt.step)
        }
        None => {
            let model = DeepSesr::<f32>::init(&cfg.model)?;
            let adam = Adam::new(cfg.adam(), model.params());
            (model, adam, 0)
        }
    };

    let per_epoch = (run.train.len() / cfg.batch_size) as u64;
    if per_epoch == 0 {
        return Err(deep_sesr_core::Error::Argument(format!(
            "{} samples cannot fill one batch of {}",
            run.train.len(),
            cfg.batch_size
        ))
        .into());
    }
    let total = planned_steps(cfg, run.train.len());
    let mut sink = LogSink::open(run.out_dir)?;
    let mut log = TrainLog::default();
    let mut order: Option<(u64, Vec<Vec<usize>>)> = None;

    while step < total {
        let epoch = step / per_epoch;
        if order.as_ref().map(|o| o.0) != Some(epoch) {
            order = Some((epoch, epoch_batches(run.train.len(), cfg.batch_size, cfg.seed, epoch)?));
        }
        let batch_idx = &order.as_ref().expect("set above").1[(step % per_epoch) as usize];
        let batch: Vec<&PairedSample> = batch_idx.iter().map(|&i| &run.train[i]).collect();
        let started = Instant::now();
        let result = train_step(&mut model, &mut adam, &batch, &cfg.loss_weights, extractor.as_ref(), StepKind::Full, cfg.grad_clip());
        let loss = match result {
            Ok(loss) => loss,
            Err(err @ deep_sesr_core::Error::NonFinite(_)) => {
                if let Some(dir) = run.out_dir {
                    snapshot(&model, &adam, cfg, step).save(&dir.join(LAST_GOOD_CHECKPOINT))?;
                }
                return Err(err.into());
            }
            Err(err) => return Err(err.into()),
        };
        step += 1;
        sink.write(
            &mut log,
            LogRecord::Step(StepRecord {
                step,
                epoch,
                loss,
                seconds: started.elapsed().as_secs_f64(),
            }),
        )?;
        if cfg.validate_every > 0 && step % cfg.validate_every == 0 && !run.val.is_empty() {
            let report = validate(&model, run.val)?;
            sink.write(&mut log, LogRecord::Validation { step, report })?;
        }
        if let Some(dir) = run.out_dir {
            if cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 {
                snapshot(&model, &adam, cfg, step).save(&dir.join(format!("step_{step:06}.dsesr")))?;
            }
        }
    }

    let checkpoint = snapshot(&model, &adam, cfg, step);
    if let Some(dir) = run.out_dir {
        checkpoint.save(&dir.join(FINAL_CHECKPOINT))?;
    }
    Ok(TrainOutcome { model, checkpoint, log })
}
