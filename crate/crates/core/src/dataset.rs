//! Paired SESR samples and the degradations that produce their inputs.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::image::{
    default_blur_sigma, downsample_by_scale, gaussian_blur, seeded_rng, ImageTensor, SaliencyMap, Scale,
};

/// One training record: distorted LR input `x`, optional saliency `s`,
/// enhanced LR target `e` and HR target `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub x: ImageTensor,
    pub s: Option<SaliencyMap>,
    pub e: ImageTensor,
    pub y: ImageTensor,
    pub scale: Scale,
}

impl PairedSample {
    pub fn new(
        x: ImageTensor,
        s: Option<SaliencyMap>,
        e: ImageTensor,
        y: ImageTensor,
        scale: Scale,
    ) -> Result<Self> {
        let lr = (scale.reduce(y.height()), scale.reduce(y.width()));
        if x.dims() != lr {
            bail!(
                Argument,
                "input is {}x{}, expected {}x{} for a {}x{} target at {}",
                x.width(),
                x.height(),
                lr.1,
                lr.0,
                y.width(),
                y.height(),
                scale
            );
        }
        if e.dims() != lr {
            bail!(Argument, "enhanced target is {}x{}, expected {}x{}", e.width(), e.height(), lr.1, lr.0);
        }
        if let Some(s) = &s {
            if s.dims() != lr {
                bail!(Argument, "saliency map is {}x{}, expected {}x{}", s.width(), s.height(), lr.1, lr.0);
            }
        }
        Ok(PairedSample { x, s, e, y, scale })
    }

    /// Infers the scale relating an HR and an LR extent, if any is admissible.
    pub fn infer_scale(hr: (usize, usize), lr: (usize, usize)) -> Option<Scale> {
        Scale::ALL
            .into_iter()
            .find(|s| (s.reduce(hr.0), s.reduce(hr.1)) == lr)
    }
}

/// Relative order of Gaussian blurring (GB) and bicubic down-sampling (BD).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegradeSet {
    /// GB then BD.
    U,
    /// Fair coin per sample.
    F,
    /// BD then GB.
    O,
}

impl core::str::FromStr for DegradeSet {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U" | "u" => Ok(DegradeSet::U),
            "F" | "f" => Ok(DegradeSet::F),
            "O" | "o" => Ok(DegradeSet::O),
            _ => bail!(Argument, "degradation set must be U, F or O, got `{}`", s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradeOrder {
    BlurFirst,
    DownsampleFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeSpec {
    pub set: DegradeSet,
    pub scale: Scale,
    pub kernel_size: usize,
    pub sigma: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl DegradeSpec {
    /// 7x7 kernel, 20% noise level.
    pub fn new(set: DegradeSet, scale: Scale, seed: u64) -> Self {
        DegradeSpec {
            set,
            scale,
            kernel_size: 7,
            sigma: default_blur_sigma(7),
            noise_level: 0.2,
            seed,
        }
    }

    /// Order used for this spec plus the seed of the blur noise.
    pub fn resolve(&self) -> (DegradeOrder, u64) {
        let mut rng = seeded_rng(self.seed);
        let coin: bool = rng.random();
        let noise_seed = rng.next_u64();
        let order = match self.set {
            DegradeSet::U => DegradeOrder::BlurFirst,
            DegradeSet::O => DegradeOrder::DownsampleFirst,
            DegradeSet::F if coin => DegradeOrder::BlurFirst,
            DegradeSet::F => DegradeOrder::DownsampleFirst,
        };
        (order, noise_seed)
    }
}

/// Produces the LR distorted input from a distorted HR image.
pub fn degrade(hr_distorted: &ImageTensor, spec: &DegradeSpec) -> Result<ImageTensor> {
    let (order, noise_seed) = spec.resolve();
    let blur = |img: &ImageTensor| gaussian_blur(img, spec.kernel_size, spec.sigma, spec.noise_level, noise_seed);
    match order {
        DegradeOrder::BlurFirst => downsample_by_scale(&blur(hr_distorted)?, spec.scale),
        DegradeOrder::DownsampleFirst => blur(&downsample_by_scale(hr_distorted, spec.scale)?),
    }
}

/// Parameters of the underwater-style color distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortParams {
    /// Per-channel attenuation; red is attenuated most.
    pub gains: [f64; 3],
    /// Blend weight of the haze veil.
    pub haze: f64,
    /// Veil color; its red component is always zero.
    pub veil: [f64; 3],
    /// Pull of green and blue toward luminance.
    pub desaturation: f64,
}

impl DistortParams {
    /// Draws parameters from the documented ranges:
    /// gains R [0.35, 0.7], G [0.75, 0.95], B [0.85, 1.0];
    /// haze [0.2, 0.45]; veil G [0.35, 0.55], B [0.45, 0.65];
    /// desaturation [0.1, 0.3].
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = seeded_rng(seed ^ 0x5eed_d157_0000_0000);
        let mut pick = |lo: f64, hi: f64| rng.random_range(lo..=hi);
        DistortParams {
            gains: [pick(0.35, 0.7), pick(0.75, 0.95), pick(0.85, 1.0)],
            haze: pick(0.2, 0.45),
            veil: [0.0, pick(0.35, 0.55), pick(0.45, 0.65)],
            desaturation: pick(0.1, 0.3),
        }
    }

    pub fn apply(&self, img: &ImageTensor) -> Result<ImageTensor> {
        let (h, w) = img.dims();
        let lum = img.luminance();
        let keep = 1.0 - self.haze;
        ImageTensor::from_fn(h, w, |c, y, x| {
            let v = img.get(c, y, x);
            let v = if c == 0 {
                v
            } else {
                (1.0 - self.desaturation) * v + self.desaturation * lum.get(y, x)
            };
            keep * self.gains[c] * v + self.haze * self.veil[c]
        })
    }
}

/// Seeded stand-in for a learned clean-to-underwater style transfer.
///
/// The red output never exceeds the red input, pixel by pixel.
pub fn synth_distort(hr_clean: &ImageTensor, seed: u64) -> Result<ImageTensor> {
    DistortParams::from_seed(seed).apply(hr_clean)
}

/// Sample order for one epoch, a pure function of `(seed, epoch)`.
pub fn epoch_order(len: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}

/// Batches of indices for one epoch; the incomplete tail is dropped.
pub fn epoch_batches(len: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        bail!(Argument, "batch size must be at least 1");
    }
    if len == 0 {
        bail!(Argument, "cannot batch an empty dataset");
    }
    Ok(epoch_order(len, seed, epoch)
        .chunks_exact(batch_size)
        .map(<[usize]>::to_vec)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::bicubic_resize;

    fn textured(h: usize, w: usize) -> ImageTensor {
        ImageTensor::from_fn(h, w, |c, y, x| {
            0.5 + 0.4 * ((x as f64 * 0.9 + c as f64).sin() * (y as f64 * 0.7).cos())
        })
        .unwrap()
    }

    #[test]
    fn set_u_dims_follow_scale() {
        let hr = textured(48, 64);
        for s in Scale::ALL {
            let lr = degrade(&hr, &DegradeSpec::new(DegradeSet::U, s, 3)).unwrap();
            assert_eq!(lr.dims(), (s.reduce(48), s.reduce(64)));
        }
    }

    #[test]
    fn order_matters() {
        let hr = textured(32, 32);
        let mut u = DegradeSpec::new(DegradeSet::U, Scale::X2, 9);
        u.noise_level = 0.0;
        let o = DegradeSpec { set: DegradeSet::O, ..u };
        let a = degrade(&hr, &u).unwrap();
        let b = degrade(&hr, &o).unwrap();
        let blur = |i: &ImageTensor| gaussian_blur(i, 7, u.sigma, 0.0, 0).unwrap();
        let want_a = downsample_by_scale(&blur(&hr), Scale::X2).unwrap();
        let want_b = blur(&downsample_by_scale(&hr, Scale::X2).unwrap());
        assert_eq!(a, want_a);
        assert_eq!(b, want_b);
        assert_ne!(a, b);
    }

    #[test]
    fn set_f_is_seeded() {
        let hr = textured(32, 32);
        let spec = DegradeSpec::new(DegradeSet::F, Scale::X2, 77);
        assert_eq!(degrade(&hr, &spec).unwrap(), degrade(&hr, &spec).unwrap());
    }

    #[test]
    fn distortion_never_brightens_red() {
        let hr = textured(16, 16);
        for seed in 0..20 {
            let d = synth_distort(&hr, seed).unwrap();
            assert!(d.channel_mean(0) <= hr.channel_mean(0));
            assert_eq!(d, synth_distort(&hr, seed).unwrap());
        }
        // pure green: red stays zero
        let green = ImageTensor::constant(8, 8, [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(synth_distort(&green, 1).unwrap().channel_mean(0), 0.0);
    }

    #[test]
    fn batches_drop_tail_and_are_seeded() {
        let b = epoch_batches(5, 2, 1, 0).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b, epoch_batches(5, 2, 1, 0).unwrap());
        assert!(epoch_batches(0, 2, 1, 0).is_err());
        assert!(epoch_batches(4, 0, 1, 0).is_err());
    }

    #[test]
    fn scale_inference() {
        assert_eq!(PairedSample::infer_scale((480, 640), (160, 214)), Some(Scale::X3));
        assert_eq!(PairedSample::infer_scale((480, 640), (240, 300)), None);
        let y = textured(24, 24);
        let e = bicubic_resize(&y, 12, 12).unwrap();
        assert!(PairedSample::new(e.clone(), None, e.clone(), y.clone(), Scale::X2).is_ok());
        assert!(PairedSample::new(e.clone(), None, e, y, Scale::X3).is_err());
    }
}
