use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{gaussian_blur, save_png, Gray};

/// Number of images in a crop series (the original plus nine crops).
pub const CROP_STEPS: usize = 10;
/// Rotation angles in degrees.
pub const ROTATION_ANGLES: [f64; 6] = [0.0, 15.0, 30.0, 45.0, 60.0, 75.0];
/// Default Gaussian sigmas for the defocus proxy series.
pub const DEFAULT_BLUR_SIGMAS: [f64; 10] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentationKind {
    Crop,
    Rotate,
    Blur,
}

impl AugmentationKind {
    pub const ALL: [AugmentationKind; 3] = [Self::Crop, Self::Rotate, Self::Blur];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crop => "crop",
            Self::Rotate => "rotate",
            Self::Blur => "blur",
        }
    }
}

impl fmt::Display for AugmentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered augmentation steps of one base image. `step_params` holds the
/// removed fraction (crop), degrees (rotate) or sigma (blur).
#[derive(Clone, Debug)]
pub struct AugmentationSeries<T> {
    pub kind: AugmentationKind,
    pub base_id: String,
    pub steps: Vec<Gray<T>>,
    pub step_params: Vec<f64>,
}

/// Step `k` removes `k * floor(h/20)` rows from the bottom and
/// `k * floor(w/20)` columns from the right.
pub fn crop_series<T: Scalar>(base_id: &str, img: &Gray<T>) -> Result<AugmentationSeries<T>> {
    img.require_min(20, 20, "crop series")?;
    let dh = img.height() / 20;
    let dw = img.width() / 20;
    let mut steps = Vec::with_capacity(CROP_STEPS);
    let mut params = Vec::with_capacity(CROP_STEPS);
    for k in 0..CROP_STEPS {
        steps.push(img.crop(0, 0, img.width() - k * dw, img.height() - k * dh)?);
        params.push(k as f64 / 20.0);
    }
    Ok(AugmentationSeries {
        kind: AugmentationKind::Crop,
        base_id: base_id.to_string(),
        steps,
        step_params: params,
    })
}

/// Rotates about the image center on a fixed canvas with bilinear sampling.
/// Destination pixels whose source falls outside the frame take `fill`.
pub fn rotate_bilinear<T: Scalar>(img: &Gray<T>, degrees: f64, fill: T) -> Gray<T> {
    let (w, h) = (img.width(), img.height());
    let (sin, cos) = degrees.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    Gray::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cx + cos * dx + sin * dy;
        let sy = cy - sin * dx + cos * dy;
        const EPS: f64 = 1e-9;
        if sx < -EPS || sy < -EPS || sx > max_x + EPS || sy > max_y + EPS {
            return fill;
        }
        let sx = sx.clamp(0.0, max_x);
        let sy = sy.clamp(0.0, max_y);
        let x0 = sx.floor() as usize;
        let y0 = sy.floor() as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = T::lit(sx - x0 as f64);
        let fy = T::lit(sy - y0 as f64);
        let one = T::one();
        let top = img.get(x0, y0) * (one - fx) + img.get(x1, y0) * fx;
        let bottom = img.get(x0, y1) * (one - fx) + img.get(x1, y1) * fx;
        top * (one - fy) + bottom * fy
    })
}

/// Six rotations at 0°, 15°, ..., 75°, out-of-frame pixels filled with the image mean.
pub fn rotation_series<T: Scalar>(base_id: &str, img: &Gray<T>) -> Result<AugmentationSeries<T>> {
    rotation_series_with(base_id, img, &ROTATION_ANGLES)
}

/// Rotation series over arbitrary strictly increasing angles starting at 0.
pub fn rotation_series_with<T: Scalar>(
    base_id: &str,
    img: &Gray<T>,
    angles: &[f64],
) -> Result<AugmentationSeries<T>> {
    if img.width() != img.height() {
        return Err(Error::InvalidSize(format!(
            "rotation series needs a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    check_schedule(angles, "rotation angles")?;
    let fill = img.mean();
    let steps = angles
        .iter()
        .map(|&deg| {
            if deg == 0.0 {
                img.clone()
            } else {
                rotate_bilinear(img, deg, fill)
            }
        })
        .collect();
    Ok(AugmentationSeries {
        kind: AugmentationKind::Rotate,
        base_id: base_id.to_string(),
        steps,
        step_params: angles.to_vec(),
    })
}

/// One Gaussian-blurred copy per sigma. Sigmas must start at 0 and increase.
pub fn blur_series<T: Scalar>(
    base_id: &str,
    img: &Gray<T>,
    sigmas: &[f64],
) -> Result<AugmentationSeries<T>> {
    check_schedule(sigmas, "blur sigmas")?;
    let steps = sigmas
        .iter()
        .map(|&s| gaussian_blur(img, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(AugmentationSeries {
        kind: AugmentationKind::Blur,
        base_id: base_id.to_string(),
        steps,
        step_params: sigmas.to_vec(),
    })
}

fn check_schedule(params: &[f64], what: &str) -> Result<()> {
    if params.first() != Some(&0.0) {
        return Err(Error::InvalidParam(format!("{what} must start at 0")));
    }
    if params.windows(2).any(|w| !(w[1] > w[0])) || params.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// JSON sidecar describing a series written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub base_id: String,
    pub kind: AugmentationKind,
    pub step_params: Vec<f64>,
    pub files: Vec<String>,
}

/// Writes `{base_id}_{kind}_{k:02}.png` per step plus `{base_id}_{kind}.json`.
pub fn write_series<T: Scalar>(series: &AugmentationSeries<T>, dir: &Path) -> Result<PathBuf> {
    crate::io::ensure_dir(dir)?;
    let mut files = Vec::with_capacity(series.steps.len());
    for (k, step) in series.steps.iter().enumerate() {
        let name = format!("{}_{}_{:02}.png", series.base_id, series.kind, k);
        save_png(step, &dir.join(&name))?;
        files.push(name);
    }
    let sidecar = SeriesSidecar {
        base_id: series.base_id.clone(),
        kind: series.kind,
        step_params: series.step_params.clone(),
        files,
    };
    let path = dir.join(format!("{}_{}.json", series.base_id, series.kind));
    crate::io::write_json(&path, &sidecar)?;
    Ok(path)
}
