//! Image containers and the deterministic primitives every other module
//! builds on: bicubic resampling, Gaussian blur with additive noise, and
//! Sobel gradients.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Rec.601 luma weights.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RGB image with intensities in `[0, 1]`, stored as three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Builds an image from planar RGB data (`3 * height * width` values).
    ///
    /// Values must be finite; they are clamped into `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let mut img = Self::new_unclamped(height, width, data)?;
        img.clamp();
        Ok(img)
    }

    fn new_unclamped(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            bail!(Argument, "image dimensions must be positive, got {}x{}", width, height);
        }
        if data.len() != 3 * height * width {
            bail!(
                Shape,
                "{}x{} RGB image needs {} values, got {}",
                width,
                height,
                3 * height * width,
                data.len()
            );
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            bail!(NonFinite, "image value at index {} is {}", i, data[i]);
        }
        Ok(ImageTensor { height, width, data })
    }

    pub fn constant(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::from_fn(height, width, |c, _, _| rgb[c])
    }

    /// `f(channel, y, x)`.
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * height * width);
        for c in 0..3 {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v.clamp(0.0, 1.0);
    }

    fn clamp(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        mean(self.plane(c))
    }

    pub fn mean(&self) -> f64 {
        mean(&self.data)
    }

    pub fn luminance(&self) -> GrayMap {
        let n = self.height * self.width;
        let data = (0..n)
            .map(|i| LUMA[0] * self.data[i] + LUMA[1] * self.data[n + i] + LUMA[2] * self.data[2 * n + i])
            .collect();
        GrayMap {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Half-open crop `[y0, y1) x [x0, x1)`.
    pub fn crop(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> Result<Self> {
        if y0 >= y1 || x0 >= x1 || y1 > self.height || x1 > self.width {
            bail!(Argument, "crop [{y0},{y1})x[{x0},{x1}) outside {}x{} image", self.height, self.width);
        }
        Self::from_fn(y1 - y0, x1 - x0, |c, y, x| self.get(c, y + y0, x + x0))
    }

    /// Grows the image to at least `min_h x min_w` by replicating its
    /// bottom row and right column.
    pub fn pad_to(&self, min_h: usize, min_w: usize) -> Self {
        let (h, w) = (self.height.max(min_h), self.width.max(min_w));
        Self::from_fn(h, w, |c, y, x| self.get(c, y.min(self.height - 1), x.min(self.width - 1)))
            .expect("padding a valid image")
    }

    /// `[1, 3, H, W]` tensor.
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        Tensor::from_vec(
            [1, 3, self.height, self.width],
            self.data.iter().map(|&v| T::from_f64(v)).collect(),
        )
        .expect("consistent image tensor")
    }

    /// Reads batch item `n` of a `[N, 3, H, W]` tensor, clamping into `[0, 1]`.
    pub fn from_tensor<T: Real>(t: &Tensor<T>, n: usize) -> Result<Self> {
        if t.channels() != 3 {
            bail!(Shape, "expected 3 channels, got {}", t.channels());
        }
        Self::new(t.height(), t.width(), t.item(n).iter().map(|v| v.as_f64()).collect())
    }

    /// Like [`ImageTensor::new`] but rejects out-of-range values instead of clamping.
    pub fn new_strict(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!(Argument, "image value {} outside [0, 1]", v);
        }
        Self::new_unclamped(height, width, data)
    }
}

/// Per-pixel foreground probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SaliencyMap {
    /// Values must lie in `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            bail!(Argument, "saliency dimensions must be positive, got {}x{}", width, height);
        }
        if data.len() != height * width {
            bail!(Shape, "{}x{} saliency map needs {} values, got {}", width, height, height * width, data.len());
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!(Argument, "saliency value {} outside [0, 1]", v);
        }
        Ok(SaliencyMap { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x).clamp(0.0, 1.0));
            }
        }
        Self::new(height, width, data)
    }

    pub fn constant(height: usize, width: usize, v: f64) -> Result<Self> {
        Self::from_fn(height, width, |_, _| v)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn complement(&self) -> Self {
        SaliencyMap {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| 1.0 - v).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.data)
    }

    pub fn crop(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> Result<Self> {
        if y0 >= y1 || x0 >= x1 || y1 > self.height || x1 > self.width {
            bail!(Argument, "crop [{y0},{y1})x[{x0},{x1}) outside {}x{} map", self.height, self.width);
        }
        Self::from_fn(y1 - y0, x1 - x0, |y, x| self.get(y + y0, x + x0))
    }

    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        Tensor::from_vec(
            [1, 1, self.height, self.width],
            self.data.iter().map(|&v| T::from_f64(v)).collect(),
        )
        .expect("consistent saliency tensor")
    }

    pub fn from_tensor<T: Real>(t: &Tensor<T>, n: usize) -> Result<Self> {
        if t.channels() != 1 {
            bail!(Shape, "expected 1 channel, got {}", t.channels());
        }
        Self::from_fn(t.height(), t.width(), |y, x| t.item(n)[y * t.width() + x].as_f64())
    }

    /// Replicates the map into a gray RGB image.
    pub fn to_gray_image(&self) -> ImageTensor {
        ImageTensor::from_fn(self.height, self.width, |_, y, x| self.get(y, x)).expect("valid saliency")
    }
}

/// Unbounded single-channel map (luminance, gradient magnitude, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl GrayMap {
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        mean(&self.data)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Catmull-Rom cubic convolution kernel (`a = -0.5`).
pub fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source coordinate of output sample `i` under half-pixel-center alignment.
pub fn source_coord(i: usize, in_len: usize, out_len: usize) -> f64 {
    (i as f64 + 0.5) * (in_len as f64 / out_len as f64) - 0.5
}

/// Four taps and weights of the cubic kernel around `src`, with indices
/// clamped to the border (edge replication).
fn cubic_taps(src: f64, len: usize) -> [(usize, f64); 4] {
    let base = src.floor();
    let frac = src - base;
    let mut taps = [(0usize, 0.0f64); 4];
    for (k, tap) in taps.iter_mut().enumerate() {
        let offset = k as isize - 1;
        let idx = (base as isize + offset).clamp(0, len as isize - 1) as usize;
        *tap = (idx, cubic_weight(frac - offset as f64));
    }
    taps
}

fn resize_plane(src: &[f64], h: usize, w: usize, th: usize, tw: usize) -> Vec<f64> {
    let col_taps: Vec<_> = (0..tw).map(|x| cubic_taps(source_coord(x, w, tw), w)).collect();
    let mut horiz = vec![0.0; h * tw];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (x, taps) in col_taps.iter().enumerate() {
            horiz[y * tw + x] = taps.iter().map(|&(i, wt)| row[i] * wt).sum();
        }
    }
    let mut out = vec![0.0; th * tw];
    for y in 0..th {
        let taps = cubic_taps(source_coord(y, h, th), h);
        for x in 0..tw {
            let v: f64 = taps.iter().map(|&(i, wt)| horiz[i * tw + x] * wt).sum();
            out[y * tw + x] = v.clamp(0.0, 1.0);
        }
    }
    out
}

/// Bicubic resampling to exactly `target_h x target_w`.
pub fn bicubic_resize(img: &ImageTensor, target_h: usize, target_w: usize) -> Result<ImageTensor> {
    if target_h == 0 || target_w == 0 {
        bail!(Argument, "bicubic target must be at least 1x1, got {}x{}", target_w, target_h);
    }
    let (h, w) = img.dims();
    let mut data = Vec::with_capacity(3 * target_h * target_w);
    for c in 0..3 {
        data.extend(resize_plane(img.plane(c), h, w, target_h, target_w));
    }
    ImageTensor::new(target_h, target_w, data)
}

/// Bicubic resampling of a saliency map.
pub fn resize_saliency(map: &SaliencyMap, target_h: usize, target_w: usize) -> Result<SaliencyMap> {
    if target_h == 0 || target_w == 0 {
        bail!(Argument, "bicubic target must be at least 1x1, got {}x{}", target_w, target_h);
    }
    let data = resize_plane(map.data(), map.height(), map.width(), target_h, target_w);
    SaliencyMap::new(target_h, target_w, data)
}

/// Validated super-resolution factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Scale(u32);

impl Scale {
    pub const X2: Scale = Scale(2);
    pub const X3: Scale = Scale(3);
    pub const X4: Scale = Scale(4);
    pub const ALL: [Scale; 3] = [Scale::X2, Scale::X3, Scale::X4];

    pub fn new(s: u32) -> Result<Self> {
        match s {
            2..=4 => Ok(Scale(s)),
            _ => bail!(Argument, "scale must be 2, 3 or 4, got {}", s),
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// Low-resolution extent for a high-resolution extent.
    pub fn reduce(self, extent: usize) -> usize {
        extent.div_ceil(self.get())
    }
}

impl TryFrom<u32> for Scale {
    type Error = crate::Error;
    fn try_from(v: u32) -> Result<Self> {
        Scale::new(v)
    }
}

impl From<Scale> for u32 {
    fn from(s: Scale) -> u32 {
        s.0
    }
}

impl core::fmt::Display for Scale {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}x", self.0)
    }
}

/// Bicubic down-sampling to `ceil(dim / scale)` per axis.
pub fn downsample_by_scale(img: &ImageTensor, scale: Scale) -> Result<ImageTensor> {
    bicubic_resize(img, scale.reduce(img.height()), scale.reduce(img.width()))
}

/// Standard deviation of the additive noise for a given noise level.
pub fn noise_sigma(noise_level: f64) -> f64 {
    noise_level * 0.1
}

/// Default blur sigma for a kernel size, chosen so `±3σ` spans the kernel.
pub fn default_blur_sigma(kernel_size: usize) -> f64 {
    kernel_size as f64 / 6.0
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(kernel_size: usize, sigma: f64) -> Vec<f64> {
    let r = (kernel_size / 2) as f64;
    let taps: Vec<f64> = (0..kernel_size)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

fn blur_plane(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let clampi = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * src[y * w + clampi(x as isize + k as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clampi(y as isize + k as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Separable Gaussian blur with replicated borders, followed by additive
/// zero-mean Gaussian noise of standard deviation `noise_level * 0.1`.
pub fn gaussian_blur(
    img: &ImageTensor,
    kernel_size: usize,
    sigma: f64,
    noise_level: f64,
    rng_seed: u64,
) -> Result<ImageTensor> {
    if kernel_size < 3 || kernel_size % 2 == 0 {
        bail!(Argument, "blur kernel size must be odd and at least 3, got {}", kernel_size);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        bail!(Argument, "blur sigma must be positive, got {}", sigma);
    }
    if !(0.0..=1.0).contains(&noise_level) {
        bail!(Argument, "noise level must lie in [0, 1], got {}", noise_level);
    }
    let taps = gaussian_kernel(kernel_size, sigma);
    let (h, w) = img.dims();
    let mut data = Vec::with_capacity(3 * h * w);
    for c in 0..3 {
        data.extend(blur_plane(img.plane(c), h, w, &taps));
    }
    if noise_level > 0.0 {
        let mut rng = seeded_rng(rng_seed);
        let normal = Normal::new(0.0, noise_sigma(noise_level)).expect("finite sigma");
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    ImageTensor::new(h, w, data)
}

/// Horizontal and vertical Sobel responses of a plane with replicated borders.
pub fn sobel_xy(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |y: isize, x: isize| plane[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize];
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            gy[i] = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
        }
    }
    (gx, gy)
}

/// Gradient magnitude `sqrt(Ix^2 + Iy^2)` of a single plane.
pub fn sobel_plane_magnitude(plane: &[f64], h: usize, w: usize) -> GrayMap {
    let (gx, gy) = sobel_xy(plane, h, w);
    GrayMap {
        height: h,
        width: w,
        data: gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect(),
    }
}

/// Sobel gradient magnitude of the Rec.601 luminance.
pub fn sobel_gradient_magnitude(img: &ImageTensor) -> GrayMap {
    let lum = img.luminance();
    sobel_plane_magnitude(&lum.data, lum.height, lum.width)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(h: usize, w: usize, seed: u64) -> ImageTensor {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        let data = (0..3 * h * w).map(|_| rng.random::<f64>()).collect();
        ImageTensor::new(h, w, data).unwrap()
    }

    /// Direct 2-D evaluation of the cubic kernel at one output coordinate.
    fn bicubic_oracle(img: &ImageTensor, c: usize, th: usize, tw: usize, oy: usize, ox: usize) -> f64 {
        let (h, w) = img.dims();
        let sy = (oy as f64 + 0.5) * h as f64 / th as f64 - 0.5;
        let sx = (ox as f64 + 0.5) * w as f64 / tw as f64 - 0.5;
        let mut acc = 0.0;
        for j in (sy.floor() as i64 - 1)..=(sy.floor() as i64 + 2) {
            for i in (sx.floor() as i64 - 1)..=(sx.floor() as i64 + 2) {
                let wy = cubic_weight(sy - j as f64);
                let wx = cubic_weight(sx - i as f64);
                let yy = j.clamp(0, h as i64 - 1) as usize;
                let xx = i.clamp(0, w as i64 - 1) as usize;
                acc += wy * wx * img.get(c, yy, xx);
            }
        }
        acc.clamp(0.0, 1.0)
    }

    #[test]
    fn bicubic_matches_direct_kernel_evaluation() {
        let ramp = ImageTensor::from_fn(4, 4, |c, y, x| (x as f64 + 4.0 * y as f64 + c as f64) / 20.0).unwrap();
        let up = bicubic_resize(&ramp, 8, 8).unwrap();
        for c in 0..3 {
            for y in 0..8 {
                for x in 0..8 {
                    let want = bicubic_oracle(&ramp, c, 8, 8, y, x);
                    assert!((up.get(c, y, x) - want).abs() <= 1e-6);
                }
            }
        }
        let noisy = pseudo_random(13, 9, 5);
        let down = bicubic_resize(&noisy, 5, 7).unwrap();
        for c in 0..3 {
            for y in 0..5 {
                for x in 0..7 {
                    assert!((down.get(c, y, x) - bicubic_oracle(&noisy, c, 5, 7, y, x)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn bicubic_preserves_constants() {
        let img = ImageTensor::constant(17, 23, [0.7; 3]).unwrap();
        for (th, tw) in [(1, 1), (5, 9), (40, 31)] {
            let out = bicubic_resize(&img, th, tw).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.7).abs() < 1e-12));
        }
        assert!(bicubic_resize(&img, 0, 3).is_err());
    }

    #[test]
    fn downsample_dims_follow_ceil_division() {
        let hr = ImageTensor::constant(480, 640, [0.2; 3]).unwrap();
        let dims: Vec<_> = Scale::ALL
            .iter()
            .map(|&s| {
                let lr = downsample_by_scale(&hr, s).unwrap();
                (lr.width(), lr.height())
            })
            .collect();
        assert_eq!(dims, [(320, 240), (214, 160), (160, 120)]);
        assert!(Scale::new(5).is_err());
        assert!(Scale::new(1).is_err());
    }

    #[test]
    fn blur_of_impulse_is_the_kernel() {
        let mut img = ImageTensor::constant(15, 15, [0.0; 3]).unwrap();
        for c in 0..3 {
            img.set(c, 7, 7, 1.0);
        }
        let sigma = default_blur_sigma(7);
        let out = gaussian_blur(&img, 7, sigma, 0.0, 0).unwrap();
        // closed form: separable normalized Gaussian
        let norm: f64 = (-3..=3).map(|d: i32| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).sum();
        for y in 0..15i32 {
            for x in 0..15i32 {
                let (dy, dx) = (y - 7, x - 7);
                let want = if dy.abs() <= 3 && dx.abs() <= 3 {
                    (-((dy * dy + dx * dx) as f64) / (2.0 * sigma * sigma)).exp() / (norm * norm)
                } else {
                    0.0
                };
                assert!((out.get(0, y as usize, x as usize) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blur_rejects_bad_arguments() {
        let img = ImageTensor::constant(8, 8, [0.5; 3]).unwrap();
        assert!(gaussian_blur(&img, 6, 1.0, 0.0, 0).is_err());
        assert!(gaussian_blur(&img, 1, 1.0, 0.0, 0).is_err());
        assert!(gaussian_blur(&img, 7, 0.0, 0.0, 0).is_err());
        assert!(gaussian_blur(&img, 7, 1.0, 1.5, 0).is_err());
        let same = gaussian_blur(&img, 7, 1.0, 0.0, 0).unwrap();
        assert!(same.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn blur_noise_is_seeded() {
        let img = pseudo_random(16, 16, 1);
        let a = gaussian_blur(&img, 7, 7.0 / 6.0, 0.2, 42).unwrap();
        let b = gaussian_blur(&img, 7, 7.0 / 6.0, 0.2, 42).unwrap();
        let c = gaussian_blur(&img, 7, 7.0 / 6.0, 0.2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sobel_step_edge_and_constant() {
        let step = ImageTensor::from_fn(8, 8, |_, _, x| if x >= 4 { 1.0 } else { 0.0 }).unwrap();
        let g = sobel_gradient_magnitude(&step);
        for y in 0..8 {
            assert!((g.get(y, 3) - 4.0).abs() < 1e-12);
            assert!((g.get(y, 4) - 4.0).abs() < 1e-12);
            assert_eq!(g.get(y, 0), 0.0);
        }
        let flat = ImageTensor::constant(9, 9, [0.3, 0.6, 0.1]).unwrap();
        assert!(sobel_gradient_magnitude(&flat).data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn sobel_matches_stencil_oracle() {
        let img = pseudo_random(8, 8, 9);
        let lum = img.luminance();
        let g = sobel_gradient_magnitude(&img);
        let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        for y in 0..8i64 {
            for x in 0..8i64 {
                let (mut sx, mut sy) = (0.0, 0.0);
                for j in 0..3i64 {
                    for i in 0..3i64 {
                        let yy = (y + j - 1).clamp(0, 7) as usize;
                        let xx = (x + i - 1).clamp(0, 7) as usize;
                        let v = lum.get(yy, xx);
                        sx += kx[j as usize][i as usize] * v;
                        sy += kx[i as usize][j as usize] * v;
                    }
                }
                assert!((g.get(y as usize, x as usize) - (sx * sx + sy * sy).sqrt()).abs() <= 1e-9);
            }
        }
    }
}
