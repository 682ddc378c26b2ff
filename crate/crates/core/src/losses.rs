//! Training objectives over the three network outputs.
//!
//! Every term reduces with a per-element mean. Each `*_grad` function
//! returns the loss together with its gradient with respect to the predicted
//! argument, laid out like that argument's planar data.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{bail, Result};
use crate::extractor::FeatureExtractor;
use crate::image::{sobel_xy, ImageTensor, SaliencyMap, LUMA};
use crate::metrics::{masked_means, CMI_EPS};
use crate::tensor::Tensor;

/// Probabilities are clamped to `[ε, 1 − ε]` inside the cross-entropy.
pub const BCE_EPS: f64 = 1e-7;
/// Weight of the perceptual term inside the color loss; MSE gets the rest.
pub const PERCEPTUAL_SHARE: f64 = 0.25;

/// A loss value and its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct WithGrad {
    pub value: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Lr,
    Hr,
}

fn same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        bail!(Argument, "{} size mismatch: {}x{} vs {}x{}", what, a.1, a.0, b.1, b.0);
    }
    Ok(())
}

pub fn saliency_loss_grad(s: &SaliencyMap, s_hat: &SaliencyMap) -> Result<WithGrad> {
    same_dims(s.dims(), s_hat.dims(), "saliency")?;
    let n = s.data().len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; s.data().len()];
    for ((g, &t), &p) in grad.iter_mut().zip(s.data()).zip(s_hat.data()) {
        let q = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        value -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
        if q == p {
            *g = (-t / q + (1.0 - t) / (1.0 - q)) / n;
        }
    }
    Ok(WithGrad { value: value / n, grad })
}

/// Binary cross-entropy between ground-truth and predicted saliency.
pub fn saliency_loss(s: &SaliencyMap, s_hat: &SaliencyMap) -> Result<f64> {
    saliency_loss_grad(s, s_hat).map(|r| r.value)
}

/// Gradients of the contrast loss with respect to `e_hat` and `s_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastGrad {
    pub value: f64,
    pub e_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
}

pub fn contrast_loss_lr_grad(
    e: &ImageTensor,
    e_hat: &ImageTensor,
    s: &SaliencyMap,
    s_hat: &SaliencyMap,
) -> Result<ContrastGrad> {
    same_dims(e.dims(), e_hat.dims(), "enhanced image")?;
    let (f0, b0) = masked_means(e, s)?;
    let (f, b) = masked_means(e_hat, s_hat)?;
    let target = (f0 - b0) / (f0 + b0 + CMI_EPS);
    let d = f + b + CMI_EPS;
    let current = (f - b) / d;
    let diff = current - target;
    let dc = 2.0 * diff;
    let dcf = dc * (2.0 * b + CMI_EPS) / (d * d);
    let dcb = -dc * (2.0 * f + CMI_EPS) / (d * d);
    let n = s_hat.data().len();
    let norm = (3 * n) as f64;
    let mut ge = vec![0.0; 3 * n];
    let mut gs = vec![0.0; n];
    for c in 0..3 {
        for (p, &m) in s_hat.data().iter().enumerate() {
            let v = e_hat.plane(c)[p];
            ge[c * n + p] = (dcf * m + dcb * (1.0 - m)) / norm;
            gs[p] += (dcf - dcb) * v / norm;
        }
    }
    Ok(ContrastGrad {
        value: diff * diff,
        e_hat: ge,
        s_hat: gs,
    })
}

/// Squared difference between the target and predicted contrast indices.
pub fn contrast_loss_lr(e: &ImageTensor, e_hat: &ImageTensor, s: &SaliencyMap, s_hat: &SaliencyMap) -> Result<f64> {
    contrast_loss_lr_grad(e, e_hat, s, s_hat).map(|r| r.value)
}

pub fn perceptual_color_lr_grad(e: &ImageTensor, e_hat: &ImageTensor) -> Result<WithGrad> {
    same_dims(e.dims(), e_hat.dims(), "image")?;
    let n = e.height() * e.width();
    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * n];
    for p in 0..n {
        let dr = e_hat.plane(0)[p] - e.plane(0)[p];
        let dg = e_hat.plane(1)[p] - e.plane(1)[p];
        let db = e_hat.plane(2)[p] - e.plane(2)[p];
        let rg = dr - dg;
        let yb = dr + dg - 2.0 * db;
        value += 4.0 * rg * rg + yb * yb;
        grad[p] = (8.0 * rg + 2.0 * yb) / n as f64;
        grad[n + p] = (-8.0 * rg + 2.0 * yb) / n as f64;
        grad[2 * n + p] = -4.0 * yb / n as f64;
    }
    Ok(WithGrad { value: value / n as f64, grad })
}

/// Chrominance distance on the red-green and yellow-blue opponent axes.
pub fn perceptual_color_lr(e: &ImageTensor, e_hat: &ImageTensor) -> Result<f64> {
    perceptual_color_lr_grad(e, e_hat).map(|r| r.value)
}

pub fn perceptual_color_hr_grad(y: &ImageTensor, y_hat: &ImageTensor) -> Result<WithGrad> {
    same_dims(y.dims(), y_hat.dims(), "image")?;
    let n = y.height() * y.width();
    let inv_n = 1.0 / n as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * n];
    for p in 0..n {
        let r0 = 255.0 * y.plane(0)[p];
        let r1 = 255.0 * y_hat.plane(0)[p];
        let dr = r1 - r0;
        let dg = 255.0 * (y_hat.plane(1)[p] - y.plane(1)[p]);
        let db = 255.0 * (y_hat.plane(2)[p] - y.plane(2)[p]);
        let rbar = 0.5 * (r0 + r1);
        value += (512.0 + rbar) / 256.0 * dr * dr + 4.0 * dg * dg + (767.0 - rbar) / 256.0 * db * db;
        // chain through rbar as well as dr, then back to [0, 1] units
        let d_r1 = 0.5 / 256.0 * (dr * dr - db * db) + 2.0 * (512.0 + rbar) / 256.0 * dr;
        grad[p] = 255.0 * d_r1 * inv_n;
        grad[n + p] = 255.0 * 8.0 * dg * inv_n;
        grad[2 * n + p] = 255.0 * 2.0 * (767.0 - rbar) / 256.0 * db * inv_n;
    }
    Ok(WithGrad { value: value * inv_n, grad })
}

/// Red-weighted ("redmean") RGB distance evaluated in 8-bit units.
pub fn perceptual_color_hr(y: &ImageTensor, y_hat: &ImageTensor) -> Result<f64> {
    perceptual_color_hr_grad(y, y_hat).map(|r| r.value)
}

pub fn mse_grad(a: &ImageTensor, a_hat: &ImageTensor) -> Result<WithGrad> {
    same_dims(a.dims(), a_hat.dims(), "image")?;
    let len = a.data().len() as f64;
    let mut value = 0.0;
    let grad = a
        .data()
        .iter()
        .zip(a_hat.data())
        .map(|(t, p)| {
            let d = p - t;
            value += d * d;
            2.0 * d / len
        })
        .collect();
    Ok(WithGrad { value: value / len, grad })
}

/// Perceptual and squared-error parts of a color loss.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColorParts {
    pub l2: f64,
    pub perceptual: f64,
    pub total: f64,
}

pub fn color_loss_grad(a: &ImageTensor, a_hat: &ImageTensor, tier: Tier) -> Result<(ColorParts, Vec<f64>)> {
    let p = match tier {
        Tier::Lr => perceptual_color_lr_grad(a, a_hat)?,
        Tier::Hr => perceptual_color_hr_grad(a, a_hat)?,
    };
    let m = mse_grad(a, a_hat)?;
    let w = PERCEPTUAL_SHARE;
    let grad = p.grad.iter().zip(&m.grad).map(|(gp, gm)| w * gp + (1.0 - w) * gm).collect();
    let parts = ColorParts {
        l2: m.value,
        perceptual: p.value,
        total: w * p.value + (1.0 - w) * m.value,
    };
    Ok((parts, grad))
}

pub fn color_loss(a: &ImageTensor, a_hat: &ImageTensor, tier: Tier) -> Result<ColorParts> {
    color_loss_grad(a, a_hat, tier).map(|r| r.0)
}

pub fn content_loss_grad(a: &ImageTensor, a_hat: &ImageTensor, extractor: &dyn FeatureExtractor) -> Result<WithGrad> {
    same_dims(a.dims(), a_hat.dims(), "image")?;
    let fa = extractor.features(&a.to_tensor())?;
    let x_hat: Tensor<f64> = a_hat.to_tensor();
    let fb = extractor.features(&x_hat)?;
    let len = fa.len() as f64;
    let mut value = 0.0;
    let seed: Vec<f64> = fa
        .data()
        .iter()
        .zip(fb.data())
        .map(|(t, p)| {
            let d = p - t;
            value += d * d;
            2.0 * d / len
        })
        .collect();
    let seed = Tensor::from_vec(fb.shape(), seed)?;
    let grad = extractor.backward(&x_hat, &seed)?.into_vec();
    Ok(WithGrad { value: value / len, grad })
}

/// Mean squared difference between extracted features.
pub fn content_loss(a: &ImageTensor, a_hat: &ImageTensor, extractor: &dyn FeatureExtractor) -> Result<f64> {
    same_dims(a.dims(), a_hat.dims(), "image")?;
    let fa = extractor.features(&a.to_tensor())?;
    let fb = extractor.features(&a_hat.to_tensor())?;
    let sum: f64 = fa.data().iter().zip(fb.data()).map(|(t, p)| (p - t) * (p - t)).sum();
    Ok(sum / fa.len() as f64)
}

/// `Ix^2 + Iy^2` of the luminance, with the Sobel responses.
fn squared_gradient(img: &ImageTensor) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let lum = img.luminance();
    let (gx, gy) = sobel_xy(&lum.data, img.height(), img.width());
    let g2 = gx.iter().zip(&gy).map(|(a, b)| a * a + b * b).collect();
    (g2, gx, gy)
}

/// Adjoint of [`sobel_xy`]: scatters per-pixel weights on `Ix` and `Iy`
/// back onto the (border-replicated) input plane.
fn sobel_adjoint(wx: &[f64], wy: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    let idx = |y: isize, x: isize| y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize;
    const TAPS: [(isize, isize, f64, f64); 8] = [
        // (dy, dx, x-kernel weight, y-kernel weight)
        (-1, -1, -1.0, -1.0),
        (-1, 0, 0.0, -2.0),
        (-1, 1, 1.0, -1.0),
        (0, -1, -2.0, 0.0),
        (0, 1, 2.0, 0.0),
        (1, -1, -1.0, 1.0),
        (1, 0, 0.0, 2.0),
        (1, 1, 1.0, 1.0),
    ];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            for &(dy, dx, kx, ky) in &TAPS {
                out[idx(y + dy, x + dx)] += kx * wx[i] + ky * wy[i];
            }
        }
    }
    out
}

pub fn sharpness_loss_grad(y: &ImageTensor, y_hat: &ImageTensor) -> Result<WithGrad> {
    same_dims(y.dims(), y_hat.dims(), "image")?;
    let (h, w) = y.dims();
    let n = h * w;
    let (g_ref, _, _) = squared_gradient(y);
    let (g_hat, gx, gy) = squared_gradient(y_hat);
    let mut value = 0.0;
    let mut wx = vec![0.0; n];
    let mut wy = vec![0.0; n];
    for i in 0..n {
        let d = g_hat[i] - g_ref[i];
        value += d.abs();
        let sign = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        wx[i] = sign * 2.0 * gx[i] / n as f64;
        wy[i] = sign * 2.0 * gy[i] / n as f64;
    }
    let d_lum = sobel_adjoint(&wx, &wy, h, w);
    let mut grad = vec![0.0; 3 * n];
    for (c, &k) in LUMA.iter().enumerate() {
        for p in 0..n {
            grad[c * n + p] = k * d_lum[p];
        }
    }
    Ok(WithGrad { value: value / n as f64, grad })
}

/// Mean absolute difference of squared luminance gradient magnitudes.
pub fn sharpness_loss(y: &ImageTensor, y_hat: &ImageTensor) -> Result<f64> {
    sharpness_loss_grad(y, y_hat).map(|r| r.value)
}

/// Scaling factors of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_s_aan: f64,
    pub lambda_c_lr: f64,
    pub lambda_f_lr: f64,
    pub lambda_t_lr: f64,
    pub lambda_c_hr: f64,
    pub lambda_f_hr: f64,
    pub lambda_g_hr: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_s_aan: 1.0,
            lambda_c_lr: 1.0,
            lambda_f_lr: 0.1,
            lambda_t_lr: 0.5,
            lambda_c_hr: 1.0,
            lambda_f_hr: 0.1,
            lambda_g_hr: 0.5,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        LossWeights {
            lambda_s_aan: 0.0,
            lambda_c_lr: 0.0,
            lambda_f_lr: 0.0,
            lambda_t_lr: 0.0,
            lambda_c_hr: 0.0,
            lambda_f_hr: 0.0,
            lambda_g_hr: 0.0,
        }
    }

    pub fn as_array(&self) -> [(&'static str, f64); 7] {
        [
            ("lambda_s_aan", self.lambda_s_aan),
            ("lambda_c_lr", self.lambda_c_lr),
            ("lambda_f_lr", self.lambda_f_lr),
            ("lambda_t_lr", self.lambda_t_lr),
            ("lambda_c_hr", self.lambda_c_hr),
            ("lambda_f_hr", self.lambda_f_hr),
            ("lambda_g_hr", self.lambda_g_hr),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.as_array() {
            if !(v >= 0.0 && v.is_finite()) {
                bail!(Config, "{} must be a non-negative number, got {}", name, v);
            }
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        LossWeights {
            lambda_s_aan: k * self.lambda_s_aan,
            lambda_c_lr: k * self.lambda_c_lr,
            lambda_f_lr: k * self.lambda_f_lr,
            lambda_t_lr: k * self.lambda_t_lr,
            lambda_c_hr: k * self.lambda_c_hr,
            lambda_f_hr: k * self.lambda_f_hr,
            lambda_g_hr: k * self.lambda_g_hr,
        }
    }
}

/// Every unweighted term plus the weighted total. Skipped terms read 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub saliency: f64,
    pub contrast_lr: f64,
    pub color_lr: ColorParts,
    pub content_lr: f64,
    pub color_hr: ColorParts,
    pub content_hr: f64,
    pub sharpness_hr: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Recombines the parts under `w`.
    pub fn weighted_sum(&self, w: &LossWeights) -> f64 {
        w.lambda_s_aan * self.saliency
            + w.lambda_c_lr * self.color_lr.total
            + w.lambda_f_lr * self.content_lr
            + w.lambda_t_lr * self.contrast_lr
            + w.lambda_c_hr * self.color_hr.total
            + w.lambda_f_hr * self.content_hr
            + w.lambda_g_hr * self.sharpness_hr
    }

    /// Element-wise mean, used to average a batch.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let k = items.len().max(1) as f64;
        let color = |f: &dyn Fn(&LossBreakdown) -> ColorParts| ColorParts {
            l2: items.iter().map(|b| f(b).l2).sum::<f64>() / k,
            perceptual: items.iter().map(|b| f(b).perceptual).sum::<f64>() / k,
            total: items.iter().map(|b| f(b).total).sum::<f64>() / k,
        };
        let avg = |f: &dyn Fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / k;
        LossBreakdown {
            saliency: avg(&|b| b.saliency),
            contrast_lr: avg(&|b| b.contrast_lr),
            color_lr: color(&|b| b.color_lr),
            content_lr: avg(&|b| b.content_lr),
            color_hr: color(&|b| b.color_hr),
            content_hr: avg(&|b| b.content_hr),
            sharpness_hr: avg(&|b| b.sharpness_hr),
            total: avg(&|b| b.total),
        }
    }
}

/// Network outputs for one sample. `saliency` is absent without the
/// attention head and `sesr` for enhance-only passes.
#[derive(Debug, Clone, Copy)]
pub struct Predicted<'a> {
    pub saliency: Option<&'a SaliencyMap>,
    pub enhanced: &'a ImageTensor,
    pub sesr: Option<&'a ImageTensor>,
}

/// Ground truth for one sample. `saliency` is absent for datasets without
/// saliency annotations.
#[derive(Debug, Clone, Copy)]
pub struct Targets<'a> {
    pub saliency: Option<&'a SaliencyMap>,
    pub enhanced: &'a ImageTensor,
    pub sesr: &'a ImageTensor,
}

/// Gradients of the total objective with respect to each prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrads {
    pub saliency: Option<Vec<f64>>,
    pub enhanced: Vec<f64>,
    pub sesr: Option<Vec<f64>>,
}

fn axpy(acc: &mut [f64], k: f64, g: &[f64]) {
    for (a, v) in acc.iter_mut().zip(g) {
        *a += k * v;
    }
}

/// The weighted sum of all active terms and its gradient.
///
/// Terms with zero weight are not evaluated. Saliency and contrast need
/// both a ground-truth and a predicted saliency map; HR terms need an SESR
/// prediction.
pub fn total_objective_grad(
    out: &Predicted,
    tgt: &Targets,
    w: &LossWeights,
    extractor: &dyn FeatureExtractor,
) -> Result<(LossBreakdown, OutputGrads)> {
    w.validate()?;
    same_dims(out.enhanced.dims(), tgt.enhanced.dims(), "enhanced output")?;
    let lr_len = tgt.enhanced.data().len();
    let mut b = LossBreakdown::default();
    let mut g_e = vec![0.0; lr_len];
    let mut g_s = out.saliency.map(|s| vec![0.0; s.data().len()]);
    let mut g_y = None;

    if let (Some(s), Some(s_hat), Some(gs)) = (tgt.saliency, out.saliency, g_s.as_mut()) {
        if w.lambda_s_aan > 0.0 {
            let r = saliency_loss_grad(s, s_hat)?;
            b.saliency = r.value;
            axpy(gs, w.lambda_s_aan, &r.grad);
        }
        if w.lambda_t_lr > 0.0 {
            let r = contrast_loss_lr_grad(tgt.enhanced, out.enhanced, s, s_hat)?;
            b.contrast_lr = r.value;
            axpy(&mut g_e, w.lambda_t_lr, &r.e_hat);
            axpy(gs, w.lambda_t_lr, &r.s_hat);
        }
    }
    if w.lambda_c_lr > 0.0 {
        let (parts, g) = color_loss_grad(tgt.enhanced, out.enhanced, Tier::Lr)?;
        b.color_lr = parts;
        axpy(&mut g_e, w.lambda_c_lr, &g);
    }
    if w.lambda_f_lr > 0.0 {
        let r = content_loss_grad(tgt.enhanced, out.enhanced, extractor)?;
        b.content_lr = r.value;
        axpy(&mut g_e, w.lambda_f_lr, &r.grad);
    }
    if let Some(y_hat) = out.sesr {
        same_dims(y_hat.dims(), tgt.sesr.dims(), "SESR output")?;
        let mut gy = vec![0.0; y_hat.data().len()];
        if w.lambda_c_hr > 0.0 {
            let (parts, g) = color_loss_grad(tgt.sesr, y_hat, Tier::Hr)?;
            b.color_hr = parts;
            axpy(&mut gy, w.lambda_c_hr, &g);
        }
        if w.lambda_f_hr > 0.0 {
            let r = content_loss_grad(tgt.sesr, y_hat, extractor)?;
            b.content_hr = r.value;
            axpy(&mut gy, w.lambda_f_hr, &r.grad);
        }
        if w.lambda_g_hr > 0.0 {
            let r = sharpness_loss_grad(tgt.sesr, y_hat)?;
            b.sharpness_hr = r.value;
            axpy(&mut gy, w.lambda_g_hr, &r.grad);
        }
        g_y = Some(gy);
    }
    b.total = b.weighted_sum(w);
    Ok((
        b,
        OutputGrads {
            saliency: g_s,
            enhanced: g_e,
            sesr: g_y,
        },
    ))
}

/// All loss terms and their weighted total.
pub fn total_objective(
    out: &Predicted,
    tgt: &Targets,
    w: &LossWeights,
    extractor: &dyn FeatureExtractor,
) -> Result<LossBreakdown> {
    total_objective_grad(out, tgt, w, extractor).map(|r| r.0)
}
