//! Spatial natural-scene-statistics features and SVR scoring.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageops::{filter_separable_reflect, gaussian_kernel_1d, Gray};
use crate::scalar::Scalar;
use crate::stats::{fit_aggd, fit_ggd};

pub const FEATURE_LEN: usize = 36;
pub const MIN_SIDE: usize = 32;
/// Stabilizing constant of the contrast normalization on the `[0, 255]` scale.
pub const MSCN_C: f64 = 1.0;
const WINDOW_SIGMA: f64 = 7.0 / 6.0;
const WINDOW_RADIUS: usize = 3;

/// Mean-subtracted contrast-normalized field and its local deviation field.
pub struct Mscn<T> {
    pub coefficients: Gray<T>,
    pub sigma: Gray<T>,
}

/// MSCN coefficients `(I - μ) / (σ + C)` over a 7x7 Gaussian window.
pub fn mscn<T: Scalar>(img: &Gray<T>) -> Mscn<T> {
    let taps = gaussian_kernel_1d::<T>(WINDOW_SIGMA, WINDOW_RADIUS);
    let mu = filter_separable_reflect(img, &taps);
    let sq = filter_separable_reflect(&img.map(|v| v * v), &taps);
    let (w, h) = (img.width(), img.height());
    let sigma = Gray::from_fn(w, h, |x, y| {
        let m = mu.get(x, y);
        (sq.get(x, y) - m * m).abs().sqrt()
    });
    let c = T::lit(MSCN_C);
    let coefficients =
        Gray::from_fn(w, h, |x, y| (img.get(x, y) - mu.get(x, y)) / (sigma.get(x, y) + c));
    Mscn {
        coefficients,
        sigma,
    }
}

/// Neighbour products in the horizontal, vertical and two diagonal directions.
fn pair_products<T: Scalar>(m: &Gray<T>) -> [Vec<T>; 4] {
    let (w, h) = (m.width(), m.height());
    let mut hz = Vec::with_capacity((w - 1) * h);
    let mut vt = Vec::with_capacity(w * (h - 1));
    let mut d1 = Vec::with_capacity((w - 1) * (h - 1));
    let mut d2 = Vec::with_capacity((w - 1) * (h - 1));
    for y in 0..h {
        for x in 0..w {
            let v = m.get(x, y);
            if x + 1 < w {
                hz.push(v * m.get(x + 1, y));
            }
            if y + 1 < h {
                vt.push(v * m.get(x, y + 1));
                if x + 1 < w {
                    d1.push(v * m.get(x + 1, y + 1));
                }
                if x >= 1 {
                    d2.push(v * m.get(x - 1, y + 1));
                }
            }
        }
    }
    [hz, vt, d1, d2]
}

fn scale_features<T: Scalar>(img: &Gray<T>, out: &mut Vec<T>) -> Result<()> {
    let field = mscn(img).coefficients;
    let ggd = fit_ggd(field.data())?;
    out.push(ggd.alpha);
    out.push(ggd.sigma * ggd.sigma);
    for products in pair_products(&field) {
        let p = fit_aggd(&products)?;
        out.extend([p.alpha, p.eta, p.sigma_l * p.sigma_l, p.sigma_r * p.sigma_r]);
    }
    Ok(())
}

/// Cubic convolution weight (Keys, a = -0.5).
fn cubic(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        1.5 * t * t * t - 2.5 * t * t + 1.0
    } else if t < 2.0 {
        -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
    } else {
        0.0
    }
}

/// Half-resolution bicubic resample with pixel-center alignment and clamped
/// borders.
pub fn downsample_bicubic_2x<T: Scalar>(img: &Gray<T>) -> Gray<T> {
    let (w, h) = (img.width(), img.height());
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    // source center of output pixel i is 2i + 0.5, between pixels 2i and 2i+1
    let weights = [cubic(1.5), cubic(0.5), cubic(0.5), cubic(1.5)].map(T::lit);
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![T::zero(); ow * h];
    for y in 0..h {
        let row = img.row(y);
        for x in 0..ow {
            let base = 2 * x as isize - 1;
            let mut acc = T::zero();
            for (k, &wt) in weights.iter().enumerate() {
                acc += wt * row[clamp(base + k as isize, w)];
            }
            tmp[y * ow + x] = acc;
        }
    }
    Gray::from_fn(ow, oh, |x, y| {
        let base = 2 * y as isize - 1;
        let mut acc = T::zero();
        for (k, &wt) in weights.iter().enumerate() {
            acc += wt * tmp[clamp(base + k as isize, h) * ow + x];
        }
        acc
    })
}

/// 36 NSS features: for the original and a half-scale copy, the GGD shape
/// and variance of the MSCN field, then `(α, η, σ_l², σ_r²)` for each of
/// the four neighbour-product fields.
pub fn brisque_features<T: Scalar>(img: &Gray<T>) -> Result<Vec<T>> {
    img.require_min(MIN_SIDE, MIN_SIDE, "NSS features")?;
    let mut out = Vec::with_capacity(FEATURE_LEN);
    scale_features(img, &mut out)?;
    scale_features(&downsample_bicubic_2x(img), &mut out)?;
    debug_assert_eq!(out.len(), FEATURE_LEN);
    Ok(out)
}

/// Score of a feature row recorded alongside the model, for verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrReference {
    pub features: Vec<f64>,
    pub score: f64,
}

/// RBF epsilon-SVR in libsvm form. Features are first mapped to `[-1, 1]`
/// using `feature_min` / `feature_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub gamma: f64,
    pub rho: f64,
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub sv: Vec<Vec<f64>>,
    pub sv_coef: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<SvrReference>,
}

impl SvrModel {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::ModelUnavailable(format!("{} not found", path.display())));
        }
        let model: Self = crate::io::read_json(path)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.feature_min.len();
        if self.feature_max.len() != d {
            return Err(Error::Parse("feature_min/feature_max length mismatch".into()));
        }
        if self.sv.len() != self.sv_coef.len() {
            return Err(Error::Parse("sv/sv_coef length mismatch".into()));
        }
        if self.sv.iter().any(|s| s.len() != d) {
            return Err(Error::Parse("support vector dimension mismatch".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Parse("gamma must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.feature_min.len()
    }

    /// Maps raw features to `[-1, 1]`; features with a zero range map to 0.
    pub fn scale(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.feature_min.iter().zip(&self.feature_max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    -1.0 + 2.0 * (v - lo) / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `Σ coef_i exp(-γ |sv_i - x|²) - ρ` on scaled features.
    pub fn decision(&self, scaled: &[f64]) -> f64 {
        self.sv
            .iter()
            .zip(&self.sv_coef)
            .map(|(sv, &c)| {
                let d2: f64 = sv.iter().zip(scaled).map(|(a, b)| (a - b) * (a - b)).sum();
                c * (-self.gamma * d2).exp()
            })
            .sum::<f64>()
            - self.rho
    }
}

/// Quality score of a feature vector; lower is better.
pub fn brisque_score<T: Scalar>(features: &[T], model: Option<&SvrModel>) -> Result<f64> {
    let model = model.ok_or_else(|| Error::ModelUnavailable("no SVR model loaded".into()))?;
    if features.len() != model.dim() {
        return Err(Error::InvalidParam(format!(
            "expected {} features, got {}",
            model.dim(),
            features.len()
        )));
    }
    let raw: Vec<f64> = features.iter().map(|v| v.as_f64()).collect();
    Ok(model.decision(&model.scale(&raw)))
}
