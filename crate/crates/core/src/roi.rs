//! Region-of-interest selection by mean-shift over a saliency map.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::image::SaliencyMap;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
const MAX_ITERS: usize = 100;
const MIN_SHIFT: f64 = 0.5;

/// Half-open pixel box `[x0, x1) x [y0, y1)` with its mean saliency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub score: f64,
}

impl RoiBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// A quarter of the shorter side, at least one pixel.
pub fn default_bandwidth(map: &SaliencyMap) -> f64 {
    (map.height().min(map.width()) as f64 / 4.0).max(1.0)
}

struct Point {
    y: f64,
    x: f64,
    w: f64,
}

fn salient_points(map: &SaliencyMap, threshold: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    for y in 0..map.height() {
        for x in 0..map.width() {
            let w = map.get(y, x);
            if w >= threshold && w > 0.0 {
                pts.push(Point {
                    y: y as f64,
                    x: x as f64,
                    w,
                });
            }
        }
    }
    pts
}

fn check_args(bandwidth: f64, threshold: f64) -> Result<()> {
    if !(bandwidth >= 1.0) {
        bail!(Argument, "bandwidth must be at least 1 pixel, got {}", bandwidth);
    }
    if !(0.0..=1.0).contains(&threshold) {
        bail!(Argument, "threshold must lie in [0, 1], got {}", threshold);
    }
    Ok(())
}

fn within(p: &Point, (my, mx): (f64, f64), h: f64) -> bool {
    let (dy, dx) = (p.y - my, p.x - mx);
    dy * dy + dx * dx <= h * h
}

fn converge(pts: &[Point], bandwidth: f64) -> (f64, f64) {
    let total: f64 = pts.iter().map(|p| p.w).sum();
    let mut m = (
        pts.iter().map(|p| p.w * p.y).sum::<f64>() / total,
        pts.iter().map(|p| p.w * p.x).sum::<f64>() / total,
    );
    // the centroid can fall between clusters; restart from its nearest point
    if !pts.iter().any(|p| within(p, m, bandwidth)) {
        let d2 = |p: &Point| (p.y - m.0).powi(2) + (p.x - m.1).powi(2);
        let nearest = pts
            .iter()
            .min_by(|a, b| d2(a).total_cmp(&d2(b)))
            .expect("non-empty point set");
        m = (nearest.y, nearest.x);
    }
    for _ in 0..MAX_ITERS {
        let (mut sw, mut sy, mut sx) = (0.0, 0.0, 0.0);
        for p in pts.iter().filter(|p| within(p, m, bandwidth)) {
            sw += p.w;
            sy += p.w * p.y;
            sx += p.w * p.x;
        }
        let next = (sy / sw, sx / sw);
        let shift = ((next.0 - m.0).powi(2) + (next.1 - m.1).powi(2)).sqrt();
        m = next;
        if shift < MIN_SHIFT {
            break;
        }
    }
    m
}

/// Converged mean-shift mode as `(y, x)`.
pub fn saliency_mode(map: &SaliencyMap, bandwidth: f64, threshold: f64) -> Result<(f64, f64)> {
    check_args(bandwidth, threshold)?;
    let pts = salient_points(map, threshold);
    if pts.is_empty() {
        return Err(crate::Error::EmptyRoi { threshold });
    }
    Ok(converge(&pts, bandwidth))
}

/// Mean-shift from the saliency-weighted centroid over pixels at or above
/// `threshold`; the box tightly bounds the salient pixels within one
/// bandwidth of the mode.
pub fn select_roi(map: &SaliencyMap, bandwidth: f64, threshold: f64) -> Result<RoiBox> {
    check_args(bandwidth, threshold)?;
    let pts = salient_points(map, threshold);
    if pts.is_empty() {
        return Err(crate::Error::EmptyRoi { threshold });
    }
    let mode = converge(&pts, bandwidth);
    let (mut y0, mut x0, mut y1, mut x1) = (usize::MAX, usize::MAX, 0, 0);
    for p in pts.iter().filter(|p| within(p, mode, bandwidth)) {
        let (y, x) = (p.y as usize, p.x as usize);
        y0 = y0.min(y);
        x0 = x0.min(x);
        y1 = y1.max(y + 1);
        x1 = x1.max(x + 1);
    }
    if y0 == usize::MAX {
        // the mode always has its own window's points nearby; guard anyway
        return Err(crate::Error::EmptyRoi { threshold });
    }
    let (x1, y1) = (x1.min(map.width()), y1.min(map.height()));
    let mut sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            sum += map.get(y, x);
        }
    }
    Ok(RoiBox {
        x0,
        y0,
        x1,
        y1,
        score: sum / ((y1 - y0) * (x1 - x0)) as f64,
    })
}
