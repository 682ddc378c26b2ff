//! On-disk paired datasets.
//!
//! ```text
//! root/hr/<name>.png        HR ground truth Y
//! root/lrd/<name>.png       distorted LR input X
//! root/lr/<name>.png        enhanced LR ground truth E (optional)
//! root/saliency/<name>.png  saliency S at LR size (optional)
//! root/manifest.json
//! ```
//!
//! Without `lr/`, E is the bicubic reduction of Y.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use deep_sesr_core::dataset::PairedSample;
use deep_sesr_core::image::{downsample_by_scale, Scale};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;

pub const MANIFEST_FILE: &str = "manifest.json";
const KINDS: [&str; 4] = ["hr", "lrd", "lr", "saliency"];

/// Paths relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePaths {
    pub hr: PathBuf,
    pub lrd: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub basename: String,
    pub scale: Scale,
    pub paths: SamplePaths,
    /// Hex SHA-256 of each file, keyed like `paths`.
    pub sha256: BTreeMap<String, String>,
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Image files of `dir` keyed by basename; an absent directory is empty.
fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !io::is_image_file(&path) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(Error::invalid(&path, format!("basename `{stem}` also used by {}", prev.display())));
        }
    }
    Ok(out)
}

/// Scans `root`, validates every tuple and returns the entries sorted by
/// basename.
pub fn build_manifest(root: &Path) -> Result<Vec<ManifestEntry>> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let listed: Vec<BTreeMap<String, PathBuf>> = KINDS.iter().map(|k| list_images(&root.join(k))).collect::<Result<_>>()?;
    let [hr, lrd, lr, sal] = &listed[..] else { unreachable!() };
    if hr.is_empty() {
        return Err(Error::invalid(&root.join("hr"), "no HR images found"));
    }
    for (kind, files) in KINDS.iter().zip(&listed).skip(1) {
        if let Some((name, path)) = files.iter().find(|(name, _)| !hr.contains_key(*name)) {
            return Err(Error::invalid(path, format!("{kind} image `{name}` has no HR counterpart")));
        }
    }
    let rel = |p: &Path| p.strip_prefix(root).unwrap_or(p).to_path_buf();
    let mut entries = Vec::with_capacity(hr.len());
    for (name, hr_path) in hr {
        let lrd_path = lrd
            .get(name)
            .ok_or_else(|| Error::invalid(hr_path, format!("no lrd/ image for `{name}`")))?;
        let hr_dims = io::image_dims(hr_path)?;
        let lr_dims = io::image_dims(lrd_path)?;
        let scale = PairedSample::infer_scale(hr_dims, lr_dims).ok_or_else(|| {
            Error::invalid(
                lrd_path,
                format!(
                    "{}x{} is not a 2x, 3x or 4x reduction of the {}x{} HR image",
                    lr_dims.1, lr_dims.0, hr_dims.1, hr_dims.0
                ),
            )
        })?;
        for extra in [lr.get(name), sal.get(name)].into_iter().flatten() {
            let d = io::image_dims(extra)?;
            if d != lr_dims {
                return Err(Error::invalid(extra, format!("{}x{}, expected {}x{}", d.1, d.0, lr_dims.1, lr_dims.0)));
            }
        }
        let paths = SamplePaths {
            hr: rel(hr_path),
            lrd: rel(lrd_path),
            lr: lr.get(name).map(|p| rel(p)),
            saliency: sal.get(name).map(|p| rel(p)),
        };
        let mut sha256 = BTreeMap::new();
        for (kind, path) in [("hr", Some(hr_path)), ("lrd", Some(lrd_path)), ("lr", lr.get(name)), ("saliency", sal.get(name))] {
            if let Some(path) = path {
                sha256.insert(kind.to_string(), hash_file(path)?);
            }
        }
        entries.push(ManifestEntry {
            basename: name.clone(),
            scale,
            paths,
            sha256,
        });
    }
    Ok(entries)
}

pub fn write_manifest(root: &Path, entries: &[ManifestEntry]) -> Result<PathBuf> {
    let path = root.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(entries).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads `root/manifest.json`, or scans the directory when there is none.
pub fn load_manifest(root: &Path) -> Result<Vec<ManifestEntry>> {
    let path = root.join(MANIFEST_FILE);
    if !path.exists() {
        return build_manifest(root);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(&path, e.to_string()))
}

/// Decodes one tuple; sample content depends only on the entry.
pub fn load_sample(root: &Path, entry: &ManifestEntry) -> Result<PairedSample> {
    let y = io::load_image(&root.join(&entry.paths.hr))?;
    let x = io::load_image(&root.join(&entry.paths.lrd))?;
    let e = match &entry.paths.lr {
        Some(p) => io::load_image(&root.join(p))?,
        None => downsample_by_scale(&y, entry.scale)?,
    };
    let s = entry.paths.saliency.as_ref().map(|p| io::load_saliency(&root.join(p))).transpose()?;
    PairedSample::new(x, s, e, y, entry.scale).map_err(|err| Error::invalid(&root.join(&entry.paths.lrd), err.to_string()))
}

pub fn load_samples(root: &Path, entries: &[ManifestEntry]) -> Result<Vec<PairedSample>> {
    entries.iter().map(|e| load_sample(root, e)).collect()
}

/// Loads every sample of a dataset directory.
pub fn load_dataset(root: &Path) -> Result<Vec<PairedSample>> {
    load_samples(root, &load_manifest(root)?)
}

/// Fully loaded batches for one epoch; trailing samples that do not fill a
/// batch are dropped.
pub fn batches(
    root: &Path,
    entries: &[ManifestEntry],
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Vec<PairedSample>>> {
    deep_sesr_core::dataset::epoch_batches(entries.len(), batch_size, seed, epoch)?
        .into_iter()
        .map(|idx| idx.iter().map(|&i| load_sample(root, &entries[i])).collect())
        .collect()
}
