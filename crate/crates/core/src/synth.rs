//! Seeded synthetic scenes: a bright textured foreground object on a
//! blue-green textured background, with its binary saliency mask.
//!
//! Used to build desk-scale paired corpora without external data.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::error::Result;
use crate::dataset::{degrade, synth_distort, DegradeSet, DegradeSpec, PairedSample};
use crate::image::{downsample_by_scale, resize_saliency, seeded_rng, ImageTensor, SaliencyMap, Scale};

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: ImageTensor,
    pub saliency: SaliencyMap,
}

/// Renders a `height x width` scene from `seed`.
pub fn synthetic_scene(height: usize, width: usize, seed: u64) -> Result<Scene> {
    let mut rng = seeded_rng(seed ^ 0x0005_cee0_0000_0001);
    let (h, w) = (height as f64, width as f64);

    // background: vertical water gradient plus oriented stripes
    let bg_top = [rng.random_range(0.05..0.2), rng.random_range(0.35..0.55), rng.random_range(0.45..0.65)];
    let bg_bottom = [rng.random_range(0.0..0.1), rng.random_range(0.2..0.35), rng.random_range(0.25..0.45)];
    let bg_angle: f64 = rng.random_range(0.0..core::f64::consts::PI);
    let bg_period = rng.random_range(3.0..6.0) * (w / 32.0).max(1.0);
    let bg_amp = rng.random_range(0.06..0.12);

    // foreground: warm ellipse with its own texture
    let cy = h * rng.random_range(0.42..0.58);
    let cx = w * rng.random_range(0.42..0.58);
    let ry = h * rng.random_range(0.32..0.42);
    let rx = w * rng.random_range(0.32..0.42);
    let fg = [rng.random_range(0.75..0.95), rng.random_range(0.5..0.8), rng.random_range(0.25..0.5)];
    let fg_angle: f64 = rng.random_range(0.0..core::f64::consts::PI);
    let fg_period = rng.random_range(2.5..5.0) * (w / 32.0).max(1.0);
    let fg_amp = rng.random_range(0.08..0.15);

    let inside = |y: usize, x: usize| {
        let dy = (y as f64 + 0.5 - cy) / ry;
        let dx = (x as f64 + 0.5 - cx) / rx;
        dy * dy + dx * dx <= 1.0
    };
    let stripe = |y: usize, x: usize, angle: f64, period: f64| {
        let t = x as f64 * angle.cos() + y as f64 * angle.sin();
        (core::f64::consts::TAU * t / period).sin()
    };
    let image = ImageTensor::from_fn(height, width, |c, y, x| {
        if inside(y, x) {
            fg[c] + fg_amp * stripe(y, x, fg_angle, fg_period)
        } else {
            let t = y as f64 / (h - 1.0).max(1.0);
            bg_top[c] * (1.0 - t) + bg_bottom[c] * t + bg_amp * stripe(y, x, bg_angle, bg_period)
        }
    })?;
    let saliency = SaliencyMap::from_fn(height, width, |y, x| if inside(y, x) { 1.0 } else { 0.0 })?;
    Ok(Scene { image, saliency })
}

/// A complete training record built from one synthetic scene: the clean
/// scene is the HR target, its bicubic reduction the enhanced target, and
/// the color-distorted, degraded scene the input.
pub fn synthetic_sample(hr_height: usize, hr_width: usize, scale: Scale, set: DegradeSet, seed: u64) -> Result<PairedSample> {
    let scene = synthetic_scene(hr_height, hr_width, seed)?;
    let e = downsample_by_scale(&scene.image, scale)?;
    let (lh, lw) = e.dims();
    let s = resize_saliency(&scene.saliency, lh, lw)?;
    let distorted = synth_distort(&scene.image, seed ^ 0x5eed)?;
    let x = degrade(&distorted, &DegradeSpec::new(set, scale, seed))?;
    PairedSample::new(x, Some(s), e, scene.image, scale)
}
