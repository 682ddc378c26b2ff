//! Builds a paired dataset directory from HR source images.
//!
//! Input layout: HR ground truth in `input/hr/` (or directly in `input/`),
//! distorted HR counterparts in `input/distorted/` unless synthetic
//! distortion is requested, and optional saliency maps in
//! `input/saliency/` at HR or LR size.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use deep_sesr_core::dataset::{degrade, synth_distort, DegradeSet, DegradeSpec};
use deep_sesr_core::image::{downsample_by_scale, resize_saliency, Scale};

use crate::error::{Error, Result};
use crate::io;
use crate::manifest::{build_manifest, write_manifest, ManifestEntry};

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    pub set: DegradeSet,
    pub scale: Scale,
    pub seed: u64,
    pub synthetic_distort: bool,
}

#[derive(Debug, Clone)]
pub struct PrepareSummary {
    pub entries: Vec<ManifestEntry>,
    pub per_scale: BTreeMap<Scale, usize>,
}

fn images_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| io::is_image_file(p))
        .collect();
    files.sort();
    Ok(files)
}

fn find_named(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["png", "jpg", "jpeg", "PNG", "JPG", "JPEG"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.exists())
}

/// Per-sample seed derived from the run seed and the sample's position.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn prepare(opts: &PrepareOptions) -> Result<PrepareSummary> {
    if !opts.input.is_dir() {
        return Err(Error::NotFound(opts.input.clone()));
    }
    let hr_dir = if opts.input.join("hr").is_dir() {
        opts.input.join("hr")
    } else {
        opts.input.clone()
    };
    let sources = images_in(&hr_dir)?;
    if sources.is_empty() {
        return Err(Error::invalid(&hr_dir, "no PNG or JPEG images found"));
    }
    let distorted_dir = opts.input.join("distorted");
    if !opts.synthetic_distort && !distorted_dir.is_dir() {
        return Err(Error::invalid(
            &opts.input,
            "expected a distorted/ directory of distorted HR images (or pass --synthetic-distort)",
        ));
    }
    let saliency_dir = opts.input.join("saliency");
    for (i, src) in sources.iter().enumerate() {
        let stem = src.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let seed = sample_seed(opts.seed, i);
        let clean = io::load_image(src)?;
        let distorted = if opts.synthetic_distort {
            synth_distort(&clean, seed)?
        } else {
            let path = find_named(&distorted_dir, &stem)
                .ok_or_else(|| Error::invalid(src, format!("no distorted/ image named `{stem}`")))?;
            let d = io::load_image(&path)?;
            if d.dims() != clean.dims() {
                return Err(Error::invalid(&path, "distorted image size differs from its HR image"));
            }
            d
        };
        let x = degrade(&distorted, &DegradeSpec::new(opts.set, opts.scale, seed))?;
        let e = downsample_by_scale(&clean, opts.scale)?;
        let name = format!("{stem}.png");
        io::save_image(&clean, &opts.output.join("hr").join(&name))?;
        io::save_image(&e, &opts.output.join("lr").join(&name))?;
        io::save_image(&x, &opts.output.join("lrd").join(&name))?;
        if let Some(path) = find_named(&saliency_dir, &stem) {
            let s = io::load_saliency(&path)?;
            let (h, w) = e.dims();
            io::save_saliency(&resize_saliency(&s, h, w)?, &opts.output.join("saliency").join(&name))?;
        }
    }
    let entries = build_manifest(&opts.output)?;
    write_manifest(&opts.output, &entries)?;
    let mut per_scale = BTreeMap::new();
    for e in &entries {
        *per_scale.entry(e.scale).or_insert(0) += 1;
    }
    Ok(PrepareSummary { entries, per_scale })
}
