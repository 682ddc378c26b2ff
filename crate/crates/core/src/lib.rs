//! Core algorithms for simultaneous enhancement and super-resolution (SESR)
//! of underwater imagery.
//!
//! The crate is `no_std` (with `alloc`) so the numeric pieces can be reused
//! without an operating system. Everything that touches files, clocks or the
//! command line lives in the `deep-sesr` companion crate.
//!
//! Layout:
//! - [`image`]: image containers, bicubic resampling, Gaussian blur, Sobel.
//! - [`metrics`]: PSNR, SSIM, CMI and the UIQM family.
//! - [`dataset`]: paired samples, Set-U/F/O degradation, epoch ordering.
//! - [`synth`]: seeded synthetic underwater-like scenes with saliency masks.
//! - [`tensor`], [`kernels`], [`autograd`]: a small reverse-mode engine.
//! - [`model`]: the residual dense generator with its saliency head.
//! - [`losses`], [`extractor`]: the seven training losses, their weighted
//!   total and the fixed feature maps behind the content loss.
//! - [`gradcheck`]: central differences for verifying gradients.
//! - [`optim`], [`train`]: Adam and a single optimization step.
//! - [`roi`]: mean-shift region-of-interest selection on saliency maps.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autograd;
pub mod dataset;
pub mod error;
pub mod extractor;
pub mod gradcheck;
pub mod image;
pub mod kernels;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod real;
pub mod roi;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use image::{GrayMap, ImageTensor, SaliencyMap};
pub use real::Real;
pub use tensor::Tensor;
