//! Forward and backward kernels shared by the tape and the eager executor.
//!
//! Every kernel is a plain function over [`Tensor`]s so that both execution
//! paths perform the exact same floating-point operations in the same order.

use alloc::vec;
use alloc::vec::Vec;

use crate::real::Real;
use crate::tensor::Tensor;

/// Sampling geometry shared by `im2col` and `col2im`.
#[derive(Debug, Clone, Copy)]
pub struct Patch {
    pub channels: usize,
    pub img_h: usize,
    pub img_w: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub grid_h: usize,
    pub grid_w: usize,
}

impl Patch {
    fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn cols(&self) -> usize {
        self.grid_h * self.grid_w
    }

    /// Maps a grid coordinate and kernel tap to an image coordinate.
    #[inline]
    fn source(&self, grid: usize, tap: usize, extent: usize) -> Option<usize> {
        let pos = (grid * self.stride + tap) as isize - self.pad as isize;
        (pos >= 0 && (pos as usize) < extent).then_some(pos as usize)
    }
}

/// Unfolds `img` (`channels x img_h x img_w`) into a
/// `(channels * k * k) x (grid_h * grid_w)` row-major matrix.
pub fn im2col<T: Real>(img: &[T], p: &Patch, cols: &mut [T]) {
    let ncols = p.cols();
    debug_assert_eq!(cols.len(), p.rows() * ncols);
    for c in 0..p.channels {
        let plane = &img[c * p.img_h * p.img_w..(c + 1) * p.img_h * p.img_w];
        for ky in 0..p.kernel {
            for kx in 0..p.kernel {
                let row = (c * p.kernel + ky) * p.kernel + kx;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for gy in 0..p.grid_h {
                    let line = &mut dst[gy * p.grid_w..(gy + 1) * p.grid_w];
                    match p.source(gy, ky, p.img_h) {
                        None => line.fill(T::zero()),
                        Some(iy) => {
                            let src = &plane[iy * p.img_w..(iy + 1) * p.img_w];
                            for (gx, v) in line.iter_mut().enumerate() {
                                *v = match p.source(gx, kx, p.img_w) {
                                    Some(ix) => src[ix],
                                    None => T::zero(),
                                };
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters-and-adds columns back into `img`.
pub fn col2im<T: Real>(cols: &[T], p: &Patch, img: &mut [T]) {
    let ncols = p.cols();
    for c in 0..p.channels {
        let plane = &mut img[c * p.img_h * p.img_w..(c + 1) * p.img_h * p.img_w];
        for ky in 0..p.kernel {
            for kx in 0..p.kernel {
                let row = (c * p.kernel + ky) * p.kernel + kx;
                let src = &cols[row * ncols..(row + 1) * ncols];
                for gy in 0..p.grid_h {
                    let Some(iy) = p.source(gy, ky, p.img_h) else {
                        continue;
                    };
                    for gx in 0..p.grid_w {
                        if let Some(ix) = p.source(gx, kx, p.img_w) {
                            plane[iy * p.img_w + ix] += src[gy * p.grid_w + gx];
                        }
                    }
                }
            }
        }
    }
}

fn conv_patch(x: &Tensor<impl Real>, kernel: usize) -> Patch {
    Patch {
        channels: x.channels(),
        img_h: x.height(),
        img_w: x.width(),
        kernel,
        stride: 1,
        pad: kernel / 2,
        grid_h: x.height(),
        grid_w: x.width(),
    }
}

fn add_bias<T: Real>(out: &mut [T], bias: &[T], plane: usize) {
    for (chunk, &b) in out.chunks_mut(plane).zip(bias) {
        for v in chunk {
            *v += b;
        }
    }
}

fn bias_grad<T: Real>(dy: &Tensor<T>, db: &mut [T]) {
    for n in 0..dy.batch() {
        for (c, g) in db.iter_mut().enumerate() {
            *g += dy.plane(n, c).iter().copied().sum::<T>();
        }
    }
}

/// Stride-1 "same" convolution; `w` is `[out, in, k, k]`.
pub fn conv2d<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: Option<&Tensor<T>>) -> Tensor<T> {
    let [co, ci, k, _] = w.shape();
    assert_eq!(ci, x.channels(), "conv2d: weight expects {} input channels, got {}", ci, x.channels());
    let patch = conv_patch(x, k);
    let hw = x.plane_len();
    let mut out = Tensor::zeros([x.batch(), co, x.height(), x.width()]);
    let mut cols = if k == 1 { Vec::new() } else { vec![T::zero(); patch.rows() * hw] };
    for n in 0..x.batch() {
        let rhs: &[T] = if k == 1 {
            x.item(n)
        } else {
            im2col(x.item(n), &patch, &mut cols);
            &cols
        };
        let dst = out.item_mut(n);
        T::gemm(co, ci * k * k, hw, T::one(), w.data(), (ci * k * k) as isize, 1, rhs, hw as isize, 1, T::zero(), dst, hw as isize, 1);
        if let Some(b) = b {
            add_bias(dst, b.data(), hw);
        }
    }
    out
}

/// Gradients of [`conv2d`]. Parameter gradients are accumulated into `dw`/`db`.
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    dw: &mut Tensor<T>,
    db: Option<&mut Tensor<T>>,
    want_dx: bool,
) -> Option<Tensor<T>> {
    let [co, _, k, _] = w.shape();
    let patch = conv_patch(x, k);
    let hw = x.plane_len();
    let rows = patch.rows();
    let mut cols = if k == 1 { Vec::new() } else { vec![T::zero(); rows * hw] };
    let mut dcols = if k == 1 { Vec::new() } else { vec![T::zero(); rows * hw] };
    let mut dx = want_dx.then(|| Tensor::zeros(x.shape()));
    for n in 0..x.batch() {
        let dy_n = dy.item(n);
        let cols_n: &[T] = if k == 1 {
            x.item(n)
        } else {
            im2col(x.item(n), &patch, &mut cols);
            &cols
        };
        // dW += dY (co x hw) * cols^T (hw x rows)
        T::gemm(co, hw, rows, T::one(), dy_n, hw as isize, 1, cols_n, 1, hw as isize, T::one(), dw.data_mut(), rows as isize, 1);
        if let Some(dx) = dx.as_mut() {
            let dx_n = dx.item_mut(n);
            if k == 1 {
                T::gemm(rows, co, hw, T::one(), w.data(), 1, rows as isize, dy_n, hw as isize, 1, T::zero(), dx_n, hw as isize, 1);
            } else {
                T::gemm(rows, co, hw, T::one(), w.data(), 1, rows as isize, dy_n, hw as isize, 1, T::zero(), &mut dcols, hw as isize, 1);
                col2im(&dcols, &patch, dx_n);
            }
        }
    }
    if let Some(db) = db {
        bias_grad(dy, db.data_mut());
    }
    dx
}

/// Output extent of a transposed convolution along one axis.
pub fn deconv_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input - 1) * stride + kernel - 2 * pad
}

fn deconv_patch(cout: usize, out_h: usize, out_w: usize, x: &Tensor<impl Real>, k: usize, s: usize, p: usize) -> Patch {
    Patch {
        channels: cout,
        img_h: out_h,
        img_w: out_w,
        kernel: k,
        stride: s,
        pad: p,
        grid_h: x.height(),
        grid_w: x.width(),
    }
}

/// Transposed convolution; `w` is `[in, out, k, k]`.
pub fn conv_transpose2d<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: Option<&Tensor<T>>,
    stride: usize,
    pad: usize,
) -> Tensor<T> {
    let [ci, co, k, _] = w.shape();
    assert_eq!(ci, x.channels(), "conv_transpose2d: weight expects {} input channels, got {}", ci, x.channels());
    let oh = deconv_extent(x.height(), k, stride, pad);
    let ow = deconv_extent(x.width(), k, stride, pad);
    let patch = deconv_patch(co, oh, ow, x, k, stride, pad);
    let hw = x.plane_len();
    let rows = patch.rows();
    let mut cols = vec![T::zero(); rows * hw];
    let mut out = Tensor::zeros([x.batch(), co, oh, ow]);
    for n in 0..x.batch() {
        // cols (rows x hw) = W^T (rows x ci) * X (ci x hw)
        T::gemm(rows, ci, hw, T::one(), w.data(), 1, rows as isize, x.item(n), hw as isize, 1, T::zero(), &mut cols, hw as isize, 1);
        let dst = out.item_mut(n);
        col2im(&cols, &patch, dst);
        if let Some(b) = b {
            add_bias(dst, b.data(), oh * ow);
        }
    }
    out
}

pub fn conv_transpose2d_backward<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
    dw: &mut Tensor<T>,
    db: Option<&mut Tensor<T>>,
    want_dx: bool,
) -> Option<Tensor<T>> {
    let [ci, co, k, _] = w.shape();
    let patch = deconv_patch(co, dy.height(), dy.width(), x, k, stride, pad);
    let hw = x.plane_len();
    let rows = patch.rows();
    let mut dcols = vec![T::zero(); rows * hw];
    let mut dx = want_dx.then(|| Tensor::zeros(x.shape()));
    for n in 0..x.batch() {
        im2col(dy.item(n), &patch, &mut dcols);
        // dW (ci x rows) += X (ci x hw) * dcols^T (hw x rows)
        T::gemm(ci, hw, rows, T::one(), x.item(n), hw as isize, 1, &dcols, 1, hw as isize, T::one(), dw.data_mut(), rows as isize, 1);
        if let Some(dx) = dx.as_mut() {
            T::gemm(ci, rows, hw, T::one(), w.data(), rows as isize, 1, &dcols, hw as isize, 1, T::zero(), dx.item_mut(n), hw as isize, 1);
        }
    }
    if let Some(db) = db {
        bias_grad(dy, db.data_mut());
    }
    dx
}

/// Per-channel batch statistics saved by a training-mode batch norm.
#[derive(Debug, Clone)]
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    /// Biased variance, used for normalization.
    pub var: Vec<T>,
    pub inv_std: Vec<T>,
    /// Number of values reduced per channel.
    pub count: usize,
}

pub fn batch_stats<T: Real>(x: &Tensor<T>, eps: T) -> BatchStats<T> {
    let c = x.channels();
    let count = x.batch() * x.plane_len();
    let inv_count = T::one() / T::from_f64(count as f64);
    let mut mean = vec![T::zero(); c];
    let mut var = vec![T::zero(); c];
    for ch in 0..c {
        let mut s = T::zero();
        for n in 0..x.batch() {
            s += x.plane(n, ch).iter().copied().sum::<T>();
        }
        let mu = s * inv_count;
        let mut sq = T::zero();
        for n in 0..x.batch() {
            sq += x.plane(n, ch).iter().map(|&v| (v - mu) * (v - mu)).sum::<T>();
        }
        mean[ch] = mu;
        var[ch] = sq * inv_count;
    }
    let inv_std = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    BatchStats { mean, var, inv_std, count }
}

/// Applies `gamma * (x - mean) * inv_std + beta` channel-wise.
pub fn normalize<T: Real>(x: &Tensor<T>, mean: &[T], inv_std: &[T], gamma: &[T], beta: &[T]) -> Tensor<T> {
    let mut out = x.clone();
    let plane = x.plane_len();
    let c = x.channels();
    for (i, chunk) in out.data_mut().chunks_mut(plane).enumerate() {
        let ch = i % c;
        let scale = gamma[ch] * inv_std[ch];
        for v in chunk {
            *v = (*v - mean[ch]) * scale + beta[ch];
        }
    }
    out
}

/// Backward of [`normalize`]. With `batch_mode` the mean and variance are
/// functions of `x` (training); otherwise they are constants (inference).
#[allow(clippy::too_many_arguments)]
pub fn normalize_backward<T: Real>(
    x: &Tensor<T>,
    dy: &Tensor<T>,
    mean: &[T],
    inv_std: &[T],
    gamma: &[T],
    batch_mode: bool,
    dgamma: &mut [T],
    dbeta: &mut [T],
) -> Tensor<T> {
    let c = x.channels();
    let mut sum_dy = vec![T::zero(); c];
    let mut sum_dy_xhat = vec![T::zero(); c];
    for n in 0..x.batch() {
        for ch in 0..c {
            for (&xv, &g) in x.plane(n, ch).iter().zip(dy.plane(n, ch)) {
                sum_dy[ch] += g;
                sum_dy_xhat[ch] += g * (xv - mean[ch]) * inv_std[ch];
            }
        }
    }
    for ch in 0..c {
        dgamma[ch] += sum_dy_xhat[ch];
        dbeta[ch] += sum_dy[ch];
    }
    let count = T::from_f64((x.batch() * x.plane_len()) as f64);
    let mut dx = Tensor::zeros(x.shape());
    let plane = x.plane_len();
    for (i, ((dst, src), g)) in dx
        .data_mut()
        .chunks_mut(plane)
        .zip(x.data().chunks(plane))
        .zip(dy.data().chunks(plane))
        .enumerate()
    {
        let ch = i % c;
        let scale = gamma[ch] * inv_std[ch];
        if batch_mode {
            let k = scale / count;
            for ((d, &xv), &gv) in dst.iter_mut().zip(src).zip(g) {
                let xhat = (xv - mean[ch]) * inv_std[ch];
                *d = k * (count * gv - sum_dy[ch] - xhat * sum_dy_xhat[ch]);
            }
        } else {
            for (d, &gv) in dst.iter_mut().zip(g) {
                *d = gv * scale;
            }
        }
    }
    dx
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn relu_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(y.shape(), data).expect("same shape")
}

pub fn sigmoid<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| T::one() / (T::one() + (-v).exp()))
}

pub fn sigmoid_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Tensor::from_vec(y.shape(), data).expect("same shape")
}

pub fn add<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let mut out = a.clone();
    out.add_assign(b);
    out
}

/// Concatenates along the channel axis.
pub fn concat<T: Real>(xs: &[&Tensor<T>]) -> Tensor<T> {
    let first = xs[0];
    let (n, h, w) = (first.batch(), first.height(), first.width());
    for x in xs {
        assert!(x.batch() == n && x.height() == h && x.width() == w, "concat: incompatible shapes");
    }
    let c: usize = xs.iter().map(|x| x.channels()).sum();
    let mut data = Vec::with_capacity(n * c * h * w);
    for i in 0..n {
        for x in xs {
            data.extend_from_slice(x.item(i));
        }
    }
    Tensor::from_vec([n, c, h, w], data).expect("consistent concat shape")
}

/// Splits a channel-concatenated gradient back into per-input gradients.
pub fn concat_backward<T: Real>(dy: &Tensor<T>, channels: &[usize]) -> Vec<Tensor<T>> {
    let (n, h, w) = (dy.batch(), dy.height(), dy.width());
    let plane = h * w;
    let mut outs: Vec<Vec<T>> = channels.iter().map(|&c| Vec::with_capacity(n * c * plane)).collect();
    for i in 0..n {
        let item = dy.item(i);
        let mut offset = 0;
        for (out, &c) in outs.iter_mut().zip(channels) {
            out.extend_from_slice(&item[offset..offset + c * plane]);
            offset += c * plane;
        }
    }
    outs.into_iter()
        .zip(channels)
        .map(|(d, &c)| Tensor::from_vec([n, c, h, w], d).expect("consistent split"))
        .collect()
}

pub fn crop_offsets(from: (usize, usize), to: (usize, usize)) -> (usize, usize) {
    ((from.0 - to.0) / 2, (from.1 - to.1) / 2)
}

/// Center crop to `height x width`.
pub fn center_crop<T: Real>(x: &Tensor<T>, height: usize, width: usize) -> Tensor<T> {
    assert!(height <= x.height() && width <= x.width(), "center_crop: target larger than input");
    let (oy, ox) = crop_offsets((x.height(), x.width()), (height, width));
    let mut data = Vec::with_capacity(x.batch() * x.channels() * height * width);
    for n in 0..x.batch() {
        for c in 0..x.channels() {
            let plane = x.plane(n, c);
            for y in 0..height {
                let row = (y + oy) * x.width() + ox;
                data.extend_from_slice(&plane[row..row + width]);
            }
        }
    }
    Tensor::from_vec([x.batch(), x.channels(), height, width], data).expect("crop shape")
}

pub fn center_crop_backward<T: Real>(input_shape: [usize; 4], dy: &Tensor<T>) -> Tensor<T> {
    let [_, _, ih, iw] = input_shape;
    let (oy, ox) = crop_offsets((ih, iw), (dy.height(), dy.width()));
    let mut dx = Tensor::zeros(input_shape);
    let (h, w) = (dy.height(), dy.width());
    let plane_in = ih * iw;
    for (p, src) in dy.data().chunks(h * w).enumerate() {
        let dst = &mut dx.data_mut()[p * plane_in..(p + 1) * plane_in];
        for y in 0..h {
            let row = (y + oy) * iw + ox;
            dst[row..row + w].copy_from_slice(&src[y * w..(y + 1) * w]);
        }
    }
    dx
}

/// 2x2 pooling with stride 2; odd trailing rows/columns form partial windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Average,
}

fn pooled(extent: usize) -> usize {
    extent.div_ceil(2)
}

pub fn pool2<T: Real>(x: &Tensor<T>, kind: PoolKind) -> Tensor<T> {
    let (h, w) = (x.height(), x.width());
    let (oh, ow) = (pooled(h), pooled(w));
    let mut out = Tensor::zeros([x.batch(), x.channels(), oh, ow]);
    for (p, dst) in out.data_mut().chunks_mut(oh * ow).enumerate() {
        let src = &x.data()[p * h * w..(p + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = match kind {
                    PoolKind::Max => T::neg_infinity(),
                    PoolKind::Average => T::zero(),
                };
                let mut count = 0usize;
                for y in 2 * oy..(2 * oy + 2).min(h) {
                    for xx in 2 * ox..(2 * ox + 2).min(w) {
                        let v = src[y * w + xx];
                        match kind {
                            PoolKind::Max => acc = if v > acc { v } else { acc },
                            PoolKind::Average => acc += v,
                        }
                        count += 1;
                    }
                }
                if kind == PoolKind::Average {
                    acc /= T::from_f64(count as f64);
                }
                dst[oy * ow + ox] = acc;
            }
        }
    }
    out
}

pub fn pool2_backward<T: Real>(x: &Tensor<T>, dy: &Tensor<T>, kind: PoolKind) -> Tensor<T> {
    let (h, w) = (x.height(), x.width());
    let (oh, ow) = (dy.height(), dy.width());
    let mut dx = Tensor::zeros(x.shape());
    for p in 0..x.batch() * x.channels() {
        let src = &x.data()[p * h * w..(p + 1) * h * w];
        let g = &dy.data()[p * oh * ow..(p + 1) * oh * ow];
        let dst = &mut dx.data_mut()[p * h * w..(p + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let ys = 2 * oy..(2 * oy + 2).min(h);
                let xs = 2 * ox..(2 * ox + 2).min(w);
                let gv = g[oy * ow + ox];
                match kind {
                    PoolKind::Max => {
                        let mut best = (ys.start, xs.start);
                        for y in ys.clone() {
                            for xx in xs.clone() {
                                if src[y * w + xx] > src[best.0 * w + best.1] {
                                    best = (y, xx);
                                }
                            }
                        }
                        dst[best.0 * w + best.1] += gv;
                    }
                    PoolKind::Average => {
                        let share = gv / T::from_f64((ys.len() * xs.len()) as f64);
                        for y in ys.clone() {
                            for xx in xs.clone() {
                                dst[y * w + xx] += share;
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>) -> Tensor<f64> {
        let [co, ci, k, _] = w.shape();
        let (h, wd) = (x.height(), x.width());
        let p = (k / 2) as isize;
        let mut out = Tensor::zeros([x.batch(), co, h, wd]);
        for n in 0..x.batch() {
            for o in 0..co {
                for y in 0..h {
                    for xx in 0..wd {
                        let mut s = 0.0;
                        for i in 0..ci {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = y as isize + ky as isize - p;
                                    let ix = xx as isize + kx as isize - p;
                                    if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < wd {
                                        s += x.plane(n, i)[iy as usize * wd + ix as usize]
                                            * w.data()[((o * ci + i) * k + ky) * k + kx];
                                    }
                                }
                            }
                        }
                        out.item_mut(n)[(o * h + y) * wd + xx] = s;
                    }
                }
            }
        }
        out
    }

    fn ramp(shape: [usize; 4], scale: f64) -> Tensor<f64> {
        let len: usize = shape.iter().product();
        Tensor::from_vec(shape, (0..len).map(|i| ((i * 37 % 11) as f64 - 5.0) * scale).collect()).unwrap()
    }

    #[test]
    fn conv2d_matches_direct_sum() {
        let x = ramp([2, 3, 5, 6], 0.1);
        for k in [1, 3, 5] {
            let w = ramp([4, 3, k, k], 0.07);
            let got = conv2d(&x, &w, None);
            let want = naive_conv(&x, &w);
            for (a, b) in got.data().iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deconv_is_adjoint_of_strided_conv() {
        // <deconv(x), y> == <x, conv_s(y)> where conv_s uses the same weights.
        let x = ramp([1, 2, 3, 4], 0.3);
        let w = ramp([2, 3, 4, 4], 0.11);
        let y_shape = [1, 3, deconv_extent(3, 4, 2, 1), deconv_extent(4, 4, 2, 1)];
        assert_eq!(y_shape, [1, 3, 6, 8]);
        let y = ramp(y_shape, 0.05);
        let up = conv_transpose2d(&x, &w, None, 2, 1);
        let lhs: f64 = up.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let mut dw = Tensor::zeros(w.shape());
        let back = conv_transpose2d_backward(&x, &w, &y, 2, 1, &mut dw, None, true).unwrap();
        let rhs: f64 = back.data().iter().zip(x.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn pooling_keeps_partial_windows() {
        let x = Tensor::from_vec([1, 1, 3, 3], (1..=9).map(f64::from).collect()).unwrap();
        let m = pool2(&x, PoolKind::Max);
        assert_eq!(m.data(), &[5.0, 6.0, 8.0, 9.0]);
        let a = pool2(&x, PoolKind::Average);
        assert_eq!(a.data(), &[3.0, 4.5, 7.5, 9.0]);
    }
}
