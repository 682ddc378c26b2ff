//! Image files: 8-bit PNG/JPEG in, 8-bit PNG/JPEG out.

use std::path::Path;

use deep_sesr_core::{ImageTensor, SaliencyMap};
use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::invalid(path, other.to_string()),
    })
}

/// Loads an RGB image scaled to `[0, 1]`.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut data = vec![0.0; 3 * h * w];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..3 {
            data[c * h * w + i] = f64::from(px[c]) / 255.0;
        }
    }
    Ok(ImageTensor::new(h, w, data)?)
}

/// Loads a grayscale map scaled to `[0, 1]`; color files are reduced to luma.
pub fn load_saliency(path: &Path) -> Result<SaliencyMap> {
    let gray = open(path)?.to_luma8();
    let data = gray.pixels().map(|p| f64::from(p[0]) / 255.0).collect();
    Ok(SaliencyMap::new(gray.height() as usize, gray.width() as usize, data)?)
}

/// Width and height without decoding pixel data.
pub fn image_dims(path: &Path) -> Result<(usize, usize)> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let (w, h) = image::image_dimensions(path).map_err(|e| Error::invalid(path, e.to_string()))?;
    Ok((h as usize, w as usize))
}

/// `[0, 1]` to 8 bits, rounding half away from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn write(path: &Path, result: image::ImageResult<()>) -> Result<()> {
    result.map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::invalid(path, other.to_string()),
    })
}

/// Saves in the format implied by the extension.
pub fn save_image(img: &ImageTensor, path: &Path) -> Result<()> {
    create_parent(path)?;
    let (h, w) = img.dims();
    let out = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        image::Rgb([0, 1, 2].map(|c| quantize(img.get(c, y, x))))
    });
    write(path, out.save(path))
}

/// Saves an 8-bit grayscale rendering of a saliency map.
pub fn save_saliency(map: &SaliencyMap, path: &Path) -> Result<()> {
    create_parent(path)?;
    let (h, w) = map.dims();
    let out = GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([quantize(map.get(y as usize, x as usize))]));
    write(path, out.save(path))
}

/// Whether a path has a supported image extension.
pub fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}
