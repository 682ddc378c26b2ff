//! Command-line front end. `run` returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use deep_sesr_core::dataset::DegradeSet;
use deep_sesr_core::image::{ImageTensor, Scale};
use deep_sesr_core::model::{DeepSesr, FenetVariant, ModelConfig, MIN_INPUT};
use deep_sesr_core::roi::{default_bandwidth, select_roi, RoiBox, DEFAULT_THRESHOLD};
use serde_json::json;

use crate::bench::{benchmark, PassMode};
use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::error::{exit, Error, Result};
use crate::prepare::{prepare, PrepareOptions};
use crate::trainer::{train, validate, TrainRun};
use crate::{io, manifest};

#[derive(Debug, Parser)]
#[command(name = "deep-sesr", version, about = "Simultaneous enhancement and super-resolution of underwater imagery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InferMode {
    /// Enhanced HR output.
    Sesr,
    /// Enhanced LR output only (skips the SR branch).
    Enhance,
    /// Saliency map at LR size.
    Saliency,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a paired dataset directory with a manifest.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Degradation order: U (blur then downsample), O (downsample then blur), F (coin per sample).
        #[arg(long, default_value = "F")]
        set: DegradeSet,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=4))]
        scale: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Distort HR images synthetically instead of reading `input/distorted`.
        #[arg(long)]
        synthetic_distort: bool,
    },
    /// Train a model and write checkpoints plus `train_log.ndjson`.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a trainer checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run a checkpoint on one or more images.
    Infer {
        #[arg(long)]
        ckpt: PathBuf,
        /// Image files or directories of images.
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "sesr")]
        mode: InferMode,
        #[arg(long)]
        out: PathBuf,
        /// In sesr mode, also write the intermediate enhanced LR image as `<name>_enhanced.png`.
        #[arg(long)]
        dump_enhanced: bool,
    },
    /// Find the salient region of an image, then super-resolve its enhanced crop.
    Roi {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Mean-shift bandwidth in pixels; defaults to a quarter of the shorter side.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Score a checkpoint on a prepared dataset.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// JSON report destination; the table always goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time forward passes of the FENet variants in full and enhance-only mode.
    Benchmark {
        /// Weights to time; a default-initialized model otherwise.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Restrict to one FENet variant.
        #[arg(long)]
        variant: Option<FenetVariant>,
        /// Restrict to one pass mode.
        #[arg(long, value_enum)]
        mode: Option<BenchMode>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=4))]
        scale: u32,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchMode {
    Full,
    EnhanceOnly,
}

fn scale(s: u32) -> Result<Scale> {
    Ok(Scale::new(s)?)
}

fn image_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_file() {
            files.push(input.to_path_buf());
            continue;
        }
        if !input.is_dir() {
            return Err(Error::NotFound(input.to_path_buf()));
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| Error::io(input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| io::is_image_file(p))
            .collect();
        found.sort();
        files.extend(found);
    }
    Ok(files)
}

fn no_saliency() -> Error {
    deep_sesr_core::Error::Config("model was built without a saliency head".into()).into()
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}

fn infer_one(model: &DeepSesr<f32>, file: &Path, mode: InferMode, out: &Path, dump: bool) -> Result<()> {
    let x = io::load_image(file)?;
    let name = stem(file);
    match mode {
        InferMode::Sesr => {
            let p = model.infer(&x)?;
            io::save_image(p.sesr.as_ref().expect("full pass"), &out.join(format!("{name}.png")))?;
            if dump {
                io::save_image(&p.enhanced, &out.join(format!("{name}_enhanced.png")))?;
            }
            Ok(())
        }
        InferMode::Enhance => io::save_image(&model.infer_enhance_only(&x)?.enhanced, &out.join(format!("{name}.png"))),
        InferMode::Saliency => {
            let s = model.infer_enhance_only(&x)?.saliency.ok_or_else(no_saliency)?;
            io::save_saliency(&s, &out.join(format!("{name}.png")))
        }
    }
}

/// Region of interest found on the predicted saliency, the enhanced LR crop
/// and its super-resolved counterpart.
#[derive(Debug, Clone)]
pub struct RoiResult {
    pub roi: RoiBox,
    pub crop: ImageTensor,
    pub hr_crop: ImageTensor,
}

/// Enhance-only pass, RoI selection on Ŝ, crop of Ê, then a full pass on
/// the crop. Crops under the minimum input size are edge-padded for the
/// second pass and the output is cut back to `scale ×` the crop.
pub fn roi_sesr(model: &DeepSesr<f32>, x: &ImageTensor, bandwidth: Option<f64>, threshold: f64) -> Result<RoiResult> {
    let first = model.infer_enhance_only(x)?;
    let s = first.saliency.ok_or_else(no_saliency)?;
    let bw = bandwidth.unwrap_or_else(|| default_bandwidth(&s));
    let roi = select_roi(&s, bw, threshold)?;
    let crop = first.enhanced.crop(roi.y0, roi.x0, roi.y1, roi.x1)?;
    let padded = crop.pad_to(MIN_INPUT, MIN_INPUT);
    let k = model.config().scale.get();
    let hr = model.infer(&padded)?.sesr.expect("full pass");
    let hr_crop = hr.crop(0, 0, k * crop.height(), k * crop.width())?;
    Ok(RoiResult { roi, crop, hr_crop })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Prepare { input, output, set, scale: s, seed, synthetic_distort } => {
            let summary = prepare(&PrepareOptions {
                input,
                output,
                set,
                scale: scale(s)?,
                seed,
                synthetic_distort,
            })?;
            for (s, n) in &summary.per_scale {
                println!("{s}: {n} samples");
            }
        }
        Command::Train { data, val, config, out, resume } => {
            let cfg = match config {
                Some(p) => TrainConfig::load(&p)?,
                None => TrainConfig::default(),
            };
            cfg.validate()?;
            let resume = resume.map(|p| Checkpoint::load(&p)).transpose()?;
            let train_set = manifest::load_dataset(&data)?;
            let val_set = match val {
                Some(v) => manifest::load_dataset(&v)?,
                None => Vec::new(),
            };
            let outcome = train(TrainRun {
                train: &train_set,
                val: &val_set,
                config: &cfg,
                out_dir: Some(&out),
                resume,
            })?;
            println!(
                "trained to step {}; last loss {}",
                outcome.checkpoint.step,
                outcome.log.totals().last().map_or("n/a".into(), |l| format!("{l:.6}"))
            );
        }
        Command::Infer { ckpt, input, mode, out, dump_enhanced } => {
            let model = Checkpoint::load(&ckpt)?.model()?;
            let files = image_inputs(&input)?;
            create_dir(&out)?;
            for f in &files {
                infer_one(&model, f, mode, &out, dump_enhanced)?;
            }
        }
        Command::Roi { ckpt, input, out, bandwidth, threshold } => {
            let model = Checkpoint::load(&ckpt)?.model()?;
            let r = roi_sesr(&model, &io::load_image(&input)?, bandwidth, threshold)?;
            create_dir(&out)?;
            let name = stem(&input);
            io::save_image(&r.crop, &out.join(format!("{name}_roi.png")))?;
            io::save_image(&r.hr_crop, &out.join(format!("{name}_roi_hr.png")))?;
            let b = r.roi;
            println!("{}", json!({ "x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1, "score": b.score }));
        }
        Command::Evaluate { ckpt, data, report } => {
            let model = Checkpoint::load(&ckpt)?.model()?;
            let result = validate(&model, &manifest::load_dataset(&data)?)?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&result.to_json()).expect("json values serialize");
                std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            }
            print!("{}", result.table());
        }
        Command::Benchmark { ckpt, variant, mode, scale: s, height, width, runs, json } => {
            if runs == 0 {
                return Err(Error::Usage("--runs must be at least 1".into()));
            }
            let model = match ckpt {
                Some(c) => Checkpoint::load(&c)?.model()?,
                None => DeepSesr::<f32>::init(&ModelConfig {
                    scale: scale(s)?,
                    ..Default::default()
                })?,
            };
            let variants = match variant {
                Some(v) => vec![v],
                None => vec![FenetVariant::OneD, FenetVariant::TwoD],
            };
            let modes = match mode {
                Some(BenchMode::Full) => vec![PassMode::Full],
                Some(BenchMode::EnhanceOnly) => vec![PassMode::EnhanceOnly],
                None => vec![PassMode::Full, PassMode::EnhanceOnly],
            };
            let report = benchmark(&model, height, width, runs, &variants, &modes)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.table());
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and reports errors
/// on stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
