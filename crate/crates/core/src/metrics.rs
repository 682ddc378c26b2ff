//! Full-reference (PSNR, SSIM) and no-reference (UIQM family, CMI) image
//! quality measures.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::image::{sobel_plane_magnitude, ImageTensor, SaliencyMap};

/// Guards the CMI denominator for all-dark inputs.
pub const CMI_EPS: f64 = 1e-8;

fn same_dims(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if a.dims() != b.dims() {
        bail!(
            Argument,
            "image dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        );
    }
    Ok(())
}

pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB with a peak of 1.0.
///
/// Identical images give `f64::INFINITY`.
pub fn psnr(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / m).log10())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn ssim_taps() -> Vec<f64> {
    crate::image::gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
}

/// Valid-mode separable filtering: output is `(h - n + 1) x (w - n + 1)`.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * src[y * w + x + k]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * tmp[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Structural similarity on Rec.601 luminance with an 11x11 Gaussian
/// window (σ = 1.5), averaged over positions where the window fits.
pub fn ssim(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    same_dims(a, b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        bail!(Argument, "SSIM needs at least {0}x{0} images, got {1}x{2}", SSIM_WINDOW, w, h);
    }
    let la = a.luminance().data;
    let lb = b.luminance().data;
    let taps = ssim_taps();
    let aa: Vec<f64> = la.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = lb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(&la, h, w, &taps);
    let mu_b = filter_valid(&lb, h, w, &taps);
    let e_aa = filter_valid(&aa, h, w, &taps);
    let e_bb = filter_valid(&bb, h, w, &taps);
    let e_ab = filter_valid(&ab, h, w, &taps);
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// Foreground and background mean intensities under a soft mask, taken
/// over all pixels and channels.
pub fn masked_means(img: &ImageTensor, mask: &SaliencyMap) -> Result<(f64, f64)> {
    if img.dims() != mask.dims() {
        bail!(
            Argument,
            "saliency map {}x{} does not match image {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        );
    }
    let n = mask.data().len();
    let (mut fg, mut bg) = (0.0, 0.0);
    for c in 0..3 {
        for (v, m) in img.plane(c).iter().zip(mask.data()) {
            fg += v * m;
            bg += v * (1.0 - m);
        }
    }
    Ok((fg / (3 * n) as f64, bg / (3 * n) as f64))
}

/// Contrast measurement index `(F - B) / (F + B + ε)`.
pub fn cmi(img: &ImageTensor, mask: &SaliencyMap) -> Result<f64> {
    let (f, b) = masked_means(img, mask)?;
    Ok((f - b) / (f + b + CMI_EPS))
}

/// Tunables of the UIQM family; values follow the published measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiqmParams {
    pub block: usize,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for UiqmParams {
    fn default() -> Self {
        UiqmParams {
            block: 8,
            alpha_low: 0.1,
            alpha_high: 0.1,
            c1: 0.0282,
            c2: 0.2953,
            c3: 3.5753,
        }
    }
}

fn check_blocks(img: &ImageTensor, block: usize) -> Result<(usize, usize)> {
    if block == 0 || img.height() < block || img.width() < block {
        bail!(
            Argument,
            "image {}x{} is smaller than one {}x{} block",
            img.width(),
            img.height(),
            block,
            block
        );
    }
    Ok((img.height() / block, img.width() / block))
}

/// Alpha-trimmed mean: drops `ceil(αL·K)` smallest and `floor(αR·K)` largest.
fn trimmed_mean(mut values: Vec<f64>, alpha_low: f64, alpha_high: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    let lo = (alpha_low * k as f64).ceil() as usize;
    let hi = (alpha_high * k as f64).floor() as usize;
    let kept = &values[lo.min(k)..k.saturating_sub(hi).max(lo.min(k))];
    if kept.is_empty() {
        return 0.0;
    }
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Colorfulness from trimmed statistics of the opponent planes
/// `R - G` and `(R + G)/2 - B`, on the 0-255 scale.
pub fn uicm(img: &ImageTensor, params: &UiqmParams) -> Result<f64> {
    check_blocks(img, params.block)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let rg: Vec<f64> = r.iter().zip(g).map(|(r, g)| 255.0 * (r - g)).collect();
    let yb: Vec<f64> = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| 255.0 * (0.5 * (r + g) - b))
        .collect();
    let stats = |v: Vec<f64>| {
        let mu = trimmed_mean(v.clone(), params.alpha_low, params.alpha_high);
        let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / v.len() as f64;
        (mu, var)
    };
    let (mu_rg, var_rg) = stats(rg);
    let (mu_yb, var_yb) = stats(yb);
    Ok(-0.0268 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt() + 0.1586 * (var_rg + var_yb).sqrt())
}

/// Measure of enhancement over non-overlapping blocks of a plane.
fn eme(plane: &[f64], h: usize, w: usize, block: usize) -> f64 {
    let (k2, k1) = (h / block, w / block);
    let mut total = 0.0;
    for by in 0..k2 {
        for bx in 0..k1 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for y in by * block..(by + 1) * block {
                for x in bx * block..(bx + 1) * block {
                    let v = plane[y * w + x];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if lo > 0.0 && hi > 0.0 {
                total += (hi / lo).ln();
            }
        }
    }
    2.0 / (k1 * k2) as f64 * total
}

/// Sharpness: luma-weighted EME of each channel's Sobel-edge-weighted plane.
pub fn uism(img: &ImageTensor, params: &UiqmParams) -> Result<f64> {
    check_blocks(img, params.block)?;
    let (h, w) = img.dims();
    let mut total = 0.0;
    for (c, lambda) in crate::image::LUMA.iter().enumerate() {
        let plane = img.plane(c);
        let edges = sobel_plane_magnitude(plane, h, w);
        let weighted: Vec<f64> = edges.data.iter().zip(plane).map(|(e, v)| e * v).collect();
        total += lambda * eme(&weighted, h, w, params.block);
    }
    Ok(total)
}

/// Contrast: block-wise logAMEE over all three channels.
pub fn uiconm(img: &ImageTensor, params: &UiqmParams) -> Result<f64> {
    let (k2, k1) = check_blocks(img, params.block)?;
    let w = img.width();
    let block = params.block;
    let mut total = 0.0;
    for by in 0..k2 {
        for bx in 0..k1 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for c in 0..3 {
                let plane = img.plane(c);
                for y in by * block..(by + 1) * block {
                    for x in bx * block..(bx + 1) * block {
                        lo = lo.min(plane[y * w + x]);
                        hi = hi.max(plane[y * w + x]);
                    }
                }
            }
            let (top, bot) = (hi - lo, hi + lo);
            if top > 0.0 && bot > 0.0 {
                let ratio = top / bot;
                total += ratio * ratio.ln();
            }
        }
    }
    Ok(-total / (k1 * k2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiqmParts {
    pub uiqm: f64,
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
}

pub fn uiqm_parts(img: &ImageTensor, params: &UiqmParams) -> Result<UiqmParts> {
    let uicm = uicm(img, params)?;
    let uism = uism(img, params)?;
    let uiconm = uiconm(img, params)?;
    Ok(UiqmParts {
        uiqm: params.c1 * uicm + params.c2 * uism + params.c3 * uiconm,
        uicm,
        uism,
        uiconm,
    })
}

pub fn uiqm(img: &ImageTensor, params: &UiqmParams) -> Result<f64> {
    Ok(uiqm_parts(img, params)?.uiqm)
}

/// All measures for one prediction/target pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub uiqm: f64,
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
    pub cmi: Option<f64>,
}

impl MetricReport {
    /// PSNR/SSIM against `target`; UIQM family and optional CMI on `pred`.
    pub fn compute(
        pred: &ImageTensor,
        target: &ImageTensor,
        mask: Option<&SaliencyMap>,
        params: &UiqmParams,
    ) -> Result<Self> {
        let parts = uiqm_parts(pred, params)?;
        Ok(MetricReport {
            psnr: psnr(pred, target)?,
            ssim: ssim(pred, target)?,
            uiqm: parts.uiqm,
            uicm: parts.uicm,
            uism: parts.uism,
            uiconm: parts.uiconm,
            cmi: mask.map(|m| cmi(pred, m)).transpose()?,
        })
    }
}

/// `mean ± sqrt(variance)` (population variance) of a set of scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        if values.iter().all(|&v| v == values[0]) {
            return MeanStd { mean: values[0], std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl core::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.mean.is_infinite() {
            write!(f, "inf ± {:.2}", self.std)
        } else {
            write!(f, "{:.4} ± {:.4}", self.mean, self.std)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_of_constant_images() {
        let a = ImageTensor::constant(16, 16, [0.5; 3]).unwrap();
        let b = ImageTensor::constant(16, 16, [0.6; 3]).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let c = ImageTensor::constant(16, 15, [0.6; 3]).unwrap();
        assert!(psnr(&a, &c).is_err());
    }

    #[test]
    fn ssim_constant_closed_form() {
        let a = ImageTensor::constant(16, 16, [0.2; 3]).unwrap();
        let b = ImageTensor::constant(16, 16, [0.8; 3]).unwrap();
        let c1 = 0.01f64.powi(2);
        let want = (2.0 * 0.2 * 0.8 + c1) / (0.04 + 0.64 + c1);
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-9);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let small = ImageTensor::constant(10, 16, [0.2; 3]).unwrap();
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn cmi_edge_cases() {
        let flat = ImageTensor::constant(8, 8, [0.4; 3]).unwrap();
        let half = SaliencyMap::constant(8, 8, 0.5).unwrap();
        assert!(cmi(&flat, &half).unwrap().abs() < 1e-12);
        let dark = ImageTensor::constant(8, 8, [0.0; 3]).unwrap();
        assert_eq!(cmi(&dark, &half).unwrap(), 0.0);
        let wrong = SaliencyMap::constant(8, 9, 0.5).unwrap();
        assert!(cmi(&flat, &wrong).is_err());
    }

    #[test]
    fn uiqm_structural_zeros() {
        let gray = ImageTensor::from_fn(32, 32, |_, y, x| ((x * 7 + y * 3) % 17) as f64 / 16.0).unwrap();
        assert_eq!(uicm(&gray, &UiqmParams::default()).unwrap(), 0.0);
        let flat = ImageTensor::constant(32, 32, [0.3, 0.5, 0.6]).unwrap();
        assert_eq!(uism(&flat, &UiqmParams::default()).unwrap(), 0.0);
        let tiny = ImageTensor::constant(7, 32, [0.3; 3]).unwrap();
        assert!(uiqm(&tiny, &UiqmParams::default()).is_err());
    }

    #[test]
    fn aggregate_population_std() {
        let agg = MeanStd::of(&[20.0, 22.0, 24.0]);
        assert!((agg.mean - 22.0).abs() < 1e-12);
        assert!((agg.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((agg.std - 1.633).abs() < 1e-3);
        let inf = MeanStd::of(&[f64::INFINITY, f64::INFINITY]);
        assert_eq!((inf.mean, inf.std), (f64::INFINITY, 0.0));
    }
}
