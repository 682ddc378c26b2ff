mod common;

use deep_sesr::checkpoint::Checkpoint;
use deep_sesr::trainer::{train, validate, LogRecord, Predictor, TrainRun, FINAL_CHECKPOINT, LAST_GOOD_CHECKPOINT, LOG_FILE};
use deep_sesr_core::dataset::{DegradeSet, PairedSample};
use deep_sesr_core::image::{ImageTensor, Scale};
use deep_sesr_core::synth::synthetic_sample;

fn samples(n: usize, scale: Scale) -> Vec<PairedSample> {
    (0..n).map(|i| synthetic_sample(24, 24, scale, DegradeSet::U, i as u64).unwrap()).collect()
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let data = samples(4, Scale::X2);
    let mut cfg = common::tiny_train(Scale::X2);
    cfg.max_steps = 6;
    let whole = train(TrainRun { train: &data, val: &[], config: &cfg, out_dir: None, resume: None }).unwrap();

    let mut half = cfg.clone();
    half.max_steps = 3;
    let first = train(TrainRun { train: &data, val: &[], config: &half, out_dir: None, resume: None }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.dsesr");
    first.checkpoint.save(&path).unwrap();
    let second = train(TrainRun {
        train: &data,
        val: &[],
        config: &cfg,
        out_dir: None,
        resume: Some(Checkpoint::load(&path).unwrap()),
    })
    .unwrap();

    assert_eq!(second.checkpoint.step, 6);
    assert_eq!(second.checkpoint.to_bytes(), whole.checkpoint.to_bytes());
    let mut joined = first.log.totals();
    joined.extend(second.log.totals());
    assert_eq!(joined, whole.log.totals());
}

#[test]
fn training_writes_log_and_checkpoints() {
    let data = samples(4, Scale::X2);
    let mut cfg = common::tiny_train(Scale::X2);
    cfg.max_steps = 4;
    cfg.checkpoint_every = 2;
    cfg.validate_every = 2;
    let dir = tempfile::tempdir().unwrap();
    let out = train(TrainRun { train: &data, val: &data[..2], config: &cfg, out_dir: Some(dir.path()), resume: None }).unwrap();
    for f in [FINAL_CHECKPOINT, "step_000002.dsesr", "step_000004.dsesr", LOG_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.path().join(LOG_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines.iter().filter(|l| l["kind"] == "validation").count(), 2);
    assert_eq!(out.log.records.len(), 6);
    assert!(matches!(out.log.records[2], LogRecord::Validation { step: 2, .. }));
    let reloaded = Checkpoint::load(&dir.path().join(FINAL_CHECKPOINT)).unwrap();
    assert_eq!(reloaded, out.checkpoint);
}

#[test]
fn same_seed_replays_identically() {
    let data = samples(4, Scale::X3);
    let cfg = common::tiny_train(Scale::X3);
    let run = || train(TrainRun { train: &data, val: &[], config: &cfg, out_dir: None, resume: None }).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log.totals(), b.log.totals());
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
}

#[test]
fn divergence_stops_with_last_good_checkpoint() {
    let data = samples(4, Scale::X2);
    let mut cfg = common::tiny_train(Scale::X2);
    cfg.learning_rate = 1e30;
    cfg.max_steps = 20;
    let dir = tempfile::tempdir().unwrap();
    let err = train(TrainRun { train: &data, val: &[], config: &cfg, out_dir: Some(dir.path()), resume: None }).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
    assert!(dir.path().join(LAST_GOOD_CHECKPOINT).exists());
}

#[test]
fn mismatched_scale_is_rejected() {
    let data = samples(4, Scale::X3);
    let cfg = common::tiny_train(Scale::X2);
    assert!(train(TrainRun { train: &data, val: &[], config: &cfg, out_dir: None, resume: None }).is_err());
}

/// Returns the targets themselves, or a constant offset chosen per sample.
struct Oracle {
    offsets: Option<Vec<f64>>,
}

impl Predictor for Oracle {
    fn scale(&self) -> Scale {
        Scale::X2
    }

    fn predict(&self, x: &ImageTensor, hr: (usize, usize)) -> deep_sesr::Result<(ImageTensor, ImageTensor)> {
        // the input's first pixel carries the sample's index
        let idx = (x.get(0, 0, 0) * 10.0).round() as usize;
        let d = self.offsets.as_ref().map_or(0.0, |o| o[idx]);
        let base = 0.5;
        Ok((
            ImageTensor::constant(hr.0, hr.1, [base + d; 3])?,
            ImageTensor::constant(x.height(), x.width(), [base + d; 3])?,
        ))
    }
}

fn constant_samples(n: usize) -> Vec<PairedSample> {
    (0..n)
        .map(|i| {
            let x = ImageTensor::constant(12, 12, [i as f64 / 10.0; 3]).unwrap();
            let e = ImageTensor::constant(12, 12, [0.5; 3]).unwrap();
            let y = ImageTensor::constant(24, 24, [0.5; 3]).unwrap();
            PairedSample::new(x, None, e, y, Scale::X2).unwrap()
        })
        .collect()
}

#[test]
fn identity_oracle_scores_perfectly() {
    let report = validate(&Oracle { offsets: None }, &constant_samples(3)).unwrap();
    assert_eq!(report.count, 3);
    assert_eq!(report.hr.ssim.mean, 1.0);
    assert_eq!(report.lr.ssim.mean, 1.0);
    assert!(report.hr.psnr.mean.is_infinite());
    assert_eq!(report.to_json()["hr"]["psnr"]["mean"], "inf");
    assert!(report.table().contains("inf"));
}

#[test]
fn validation_aggregates_mean_and_deviation() {
    let psnrs = [20.0f64, 22.0, 24.0];
    let offsets = psnrs.iter().map(|p| 10f64.powf(-p / 20.0)).collect();
    let report = validate(&Oracle { offsets: Some(offsets) }, &constant_samples(3)).unwrap();
    assert!((report.hr.psnr.mean - 22.0).abs() < 1e-9);
    assert!((report.hr.psnr.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-9);
    for (s, p) in report.lr.samples.iter().zip(psnrs) {
        assert!((s.psnr - p).abs() < 1e-9);
    }
}

#[test]
fn validation_rejects_empty_and_mismatched_sets() {
    assert!(validate(&Oracle { offsets: None }, &[]).is_err());
    assert!(validate(&Oracle { offsets: None }, &samples(1, Scale::X4)).is_err());
}
