//! Pristine-model quality: distance of an image's patch-feature Gaussian
//! from a Gaussian fitted to sharp reference images.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageops::Gray;
use crate::scalar::Scalar;
use crate::stats::mvg::{self, MvgModel};

use super::brisque::{brisque_features, mscn, FEATURE_LEN};

pub const DEFAULT_PATCH_SIZE: usize = 96;
pub const DEFAULT_KEEP_FRACTION: f64 = 0.75;
pub const MIN_CORPUS_IMAGES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiqeOptions {
    pub patch_size: usize,
    /// Patches whose mean local deviation is below this fraction of the
    /// sharpest patch in the same image are discarded during fitting.
    pub sharpness_keep_fraction: f64,
}

impl Default for NiqeOptions {
    fn default() -> Self {
        Self {
            patch_size: DEFAULT_PATCH_SIZE,
            sharpness_keep_fraction: DEFAULT_KEEP_FRACTION,
        }
    }
}

impl NiqeOptions {
    fn validate(&self) -> Result<()> {
        if self.patch_size < 32 {
            return Err(Error::InvalidParam(format!(
                "patch size must be >= 32, got {}",
                self.patch_size
            )));
        }
        if !(self.sharpness_keep_fraction > 0.0 && self.sharpness_keep_fraction <= 1.0) {
            return Err(Error::InvalidParam("keep fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PristineModel {
    pub mvg: MvgModel,
    pub patch_size: usize,
    pub sharpness_keep_fraction: f64,
}

impl PristineModel {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::ModelUnavailable(format!("{} not found", path.display())));
        }
        crate::io::read_json(path)
    }
}

struct Patch<T> {
    features: Option<Vec<T>>,
    sharpness: f64,
}

/// Non-overlapping `patch_size` tiles in raster order with their features
/// and mean local deviation. Tiles whose features cannot be fitted keep
/// `features: None`.
fn patches<T: Scalar>(img: &Gray<T>, patch_size: usize) -> Vec<Patch<T>> {
    let sigma = mscn(img).sigma;
    let (nx, ny) = (img.width() / patch_size, img.height() / patch_size);
    let mut out = Vec::with_capacity(nx * ny);
    for py in 0..ny {
        for px in 0..nx {
            let (x0, y0) = (px * patch_size, py * patch_size);
            let tile = img.crop(x0, y0, patch_size, patch_size).expect("tile in bounds");
            let sharp = sigma
                .crop(x0, y0, patch_size, patch_size)
                .expect("tile in bounds")
                .mean()
                .as_f64();
            out.push(Patch {
                features: brisque_features(&tile).ok(),
                sharpness: sharp,
            });
        }
    }
    out
}

/// Fits the pristine model from sharp reference images.
pub fn niqe_fit<T: Scalar>(corpus: &[Gray<T>], opts: NiqeOptions) -> Result<PristineModel> {
    opts.validate()?;
    if corpus.len() < MIN_CORPUS_IMAGES {
        return Err(Error::InsufficientSamples(format!(
            "pristine corpus needs >= {MIN_CORPUS_IMAGES} images, got {}",
            corpus.len()
        )));
    }
    let mut rows = Vec::new();
    for img in corpus {
        let tiles = patches(img, opts.patch_size);
        let max = tiles.iter().map(|p| p.sharpness).fold(0.0f64, f64::max);
        let cut = opts.sharpness_keep_fraction * max;
        rows.extend(
            tiles
                .into_iter()
                .filter(|p| max > 0.0 && p.sharpness >= cut)
                .filter_map(|p| p.features),
        );
    }
    if rows.len() < 2 * FEATURE_LEN {
        return Err(Error::InsufficientSamples(format!(
            "pristine corpus yielded {} usable patches, need {}",
            rows.len(),
            2 * FEATURE_LEN
        )));
    }
    Ok(PristineModel {
        mvg: mvg::fit_mvg(&rows)?,
        patch_size: opts.patch_size,
        sharpness_keep_fraction: opts.sharpness_keep_fraction,
    })
}

/// Distance between the image's patch-feature MVG and the pristine MVG.
/// Lower is better.
pub fn niqe_score<T: Scalar>(img: &Gray<T>, model: &PristineModel) -> Result<f64> {
    let rows: Vec<Vec<T>> = patches(img, model.patch_size)
        .into_iter()
        .filter_map(|p| p.features)
        .collect();
    if rows.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "image yields {} usable {}px patches, need 2",
            rows.len(),
            model.patch_size
        )));
    }
    let local = mvg::fit_unchecked(&rows)?;
    mvg::mvg_distance(&model.mvg, &local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageops::gaussian_blur;
    use crate::synth;

    fn corpus(n: usize) -> Vec<Gray<f64>> {
        (0..n).map(|i| synth::texture(192, 192, 100 + i as u64)).collect()
    }

    #[test]
    fn identical_corpus_mean_equals_patch_mean() {
        let img = synth::texture(192, 192, 3);
        let opts = NiqeOptions {
            patch_size: 32,
            sharpness_keep_fraction: 0.75,
        };
        let model = niqe_fit(&vec![img.clone(); 10], opts).unwrap();
        let tiles = patches(&img, 32);
        let max = tiles.iter().map(|p| p.sharpness).fold(0.0, f64::max);
        let kept: Vec<Vec<f64>> = tiles
            .into_iter()
            .filter(|p| p.sharpness >= 0.75 * max)
            .filter_map(|p| p.features)
            .collect();
        for (k, m) in model.mvg.mean.iter().enumerate() {
            let single = kept.iter().map(|r| r[k]).sum::<f64>() / kept.len() as f64;
            assert!((m - single).abs() < 1e-9 * single.abs().max(1.0));
        }
    }

    #[test]
    fn blur_scores_worse() {
        let opts = NiqeOptions {
            patch_size: 48,
            sharpness_keep_fraction: 0.75,
        };
        let images = corpus(10);
        let model = niqe_fit(&images, opts).unwrap();
        for img in images.iter().take(3) {
            let sharp = niqe_score(img, &model).unwrap();
            let blurred = niqe_score(&gaussian_blur(img, 3.0).unwrap(), &model).unwrap();
            assert!(sharp >= 0.0);
            assert!(sharp < blurred, "{sharp} vs {blurred}");
        }
    }

    #[test]
    fn errors() {
        let opts = NiqeOptions::default();
        assert!(matches!(niqe_fit(&corpus(3), opts), Err(Error::InsufficientSamples(_))));
        let small: Vec<Gray<f64>> = (0..10).map(|i| synth::texture(100, 100, i)).collect();
        assert!(matches!(niqe_fit(&small, opts), Err(Error::InsufficientSamples(_))));
        let bad = NiqeOptions {
            patch_size: 16,
            ..opts
        };
        assert!(matches!(niqe_fit(&corpus(10), bad), Err(Error::InvalidParam(_))));
    }
}
