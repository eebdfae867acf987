//! Quality-gated dataset curation.
//!
//! The crate scores images with no-reference quality measures, screens those
//! measures for robustness against crop/rotate/blur augmentation series, derives
//! per-method cut-offs from the crossing of the correct/incorrect prediction
//! densities, and assembles majority-voted, reproducible subset manifests.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the pipeline uses.

pub mod cutoff;
pub mod dataset;
pub mod error;
pub mod gating;
pub mod imageops;
pub mod io;
pub mod rng;
pub mod metrics;
pub mod scalar;
pub mod selection;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Luminance image with `f64` samples.
pub type GrayImage = imageops::Gray<f64>;
/// Luminance image with `f32` samples.
pub type GrayImage32 = imageops::Gray<f32>;
/// Augmentation series over `f64` images.
pub type AugmentationSeries = imageops::AugmentationSeries<f64>;
/// Kernel density estimate with `f64` abscissae and ordinates.
pub type DensityCurve = stats::kde::DensityCurve<f64>;
/// Generalized Gaussian fit with `f64` parameters.
pub type GgdParams = stats::nss::GgdParams<f64>;
/// Asymmetric generalized Gaussian fit with `f64` parameters.
pub type AggdParams = stats::nss::AggdParams<f64>;
