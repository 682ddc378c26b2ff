#![allow(dead_code)]

use std::path::Path;

use deep_sesr::config::{ExtractorKind, TrainConfig};
use deep_sesr::io;
use deep_sesr_core::dataset::DegradeSet;
use deep_sesr_core::image::Scale;
use deep_sesr_core::model::{FenetVariant, ModelConfig};
use deep_sesr_core::synth::synthetic_sample;

pub fn tiny_model(scale: Scale, seed: u64) -> ModelConfig {
    ModelConfig {
        scale,
        fenet_variant: FenetVariant::TwoD,
        rdb_stage1_count: 1,
        rdb_stage2_count: 1,
        rdb_growth: 4,
        fenet_out_channels: 32,
        head_channels: 4,
        use_aan: true,
        seed,
    }
}

pub fn tiny_train(scale: Scale) -> TrainConfig {
    TrainConfig {
        batch_size: 2,
        max_epochs: 100,
        max_steps: 8,
        seed: 3,
        content_extractor: ExtractorKind::Random,
        model: tiny_model(scale, 1),
        ..TrainConfig::default()
    }
}

/// Writes `n` synthetic tuples in the dataset directory layout.
pub fn write_dataset(root: &Path, n: usize, hr: (usize, usize), scale: Scale, seed: u64) {
    for kind in ["hr", "lrd", "lr", "saliency"] {
        std::fs::create_dir_all(root.join(kind)).unwrap();
    }
    for i in 0..n {
        let s = synthetic_sample(hr.0, hr.1, scale, DegradeSet::U, seed + i as u64).unwrap();
        let name = format!("img{i:03}.png");
        io::save_image(&s.y, &root.join("hr").join(&name)).unwrap();
        io::save_image(&s.x, &root.join("lrd").join(&name)).unwrap();
        io::save_image(&s.e, &root.join("lr").join(&name)).unwrap();
        io::save_saliency(s.s.as_ref().unwrap(), &root.join("saliency").join(&name)).unwrap();
    }
}
