//! Generalized Gaussian fits by moment matching.
//!
//! The shape parameter is recovered by inverting the moment ratio
//! `r(a) = Γ(2/a)² / (Γ(1/a) Γ(3/a))` against a fixed lookup grid over
//! `[0.2, 10]` with step `0.001`; `r` is strictly increasing in `a`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SHAPE_MIN: f64 = 0.2;
pub const SHAPE_MAX: f64 = 10.0;
pub const SHAPE_STEP: f64 = 0.001;
pub const MIN_FIT_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GgdParams<T> {
    pub alpha: T,
    pub sigma: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggdParams<T> {
    pub alpha: T,
    pub eta: T,
    pub sigma_l: T,
    pub sigma_r: T,
}

pub fn ggd_moment_ratio(alpha: f64) -> f64 {
    let g2 = gamma(2.0 / alpha);
    g2 * g2 / (gamma(1.0 / alpha) * gamma(3.0 / alpha))
}

struct ShapeTable {
    shapes: Vec<f64>,
    ratios: Vec<f64>,
}

fn table() -> &'static ShapeTable {
    static TABLE: OnceLock<ShapeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let steps = ((SHAPE_MAX - SHAPE_MIN) / SHAPE_STEP).round() as usize;
        let shapes: Vec<f64> = (0..=steps).map(|i| SHAPE_MIN + i as f64 * SHAPE_STEP).collect();
        let ratios = shapes.iter().map(|&a| ggd_moment_ratio(a)).collect();
        ShapeTable { shapes, ratios }
    })
}

/// Grid shape whose moment ratio is nearest to `rho` (first on ties).
pub fn invert_moment_ratio(rho: f64) -> f64 {
    let t = table();
    let idx = t.ratios.partition_point(|&r| r < rho);
    let best = if idx == 0 {
        0
    } else if idx >= t.ratios.len() {
        t.ratios.len() - 1
    } else if (rho - t.ratios[idx - 1]).abs() <= (t.ratios[idx] - rho).abs() {
        idx - 1
    } else {
        idx
    };
    t.shapes[best]
}

fn check_len(n: usize) -> Result<()> {
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "distribution fit needs n >= {MIN_FIT_SAMPLES}, got {n}"
        )));
    }
    Ok(())
}

/// Zero-mean GGD fit; `sigma` is the root mean square.
pub fn fit_ggd<T: Scalar>(samples: &[T]) -> Result<GgdParams<T>> {
    check_len(samples.len())?;
    let n = samples.len() as f64;
    let (abs_sum, sq_sum) = samples.iter().fold((0.0, 0.0), |(a, s), v| {
        let v = v.as_f64();
        (a + v.abs(), s + v * v)
    });
    let mean_abs = abs_sum / n;
    let mean_sq = sq_sum / n;
    if !(mean_sq > 0.0) || !mean_sq.is_finite() {
        return Err(Error::DegenerateSeries("zero second moment".into()));
    }
    let rho = mean_abs * mean_abs / mean_sq;
    Ok(GgdParams {
        alpha: T::lit(invert_moment_ratio(rho)),
        sigma: T::lit(mean_sq.sqrt()),
    })
}

/// Asymmetric GGD fit with separate left/right root-mean-squares.
///
/// `eta = Γ(2/α)/Γ(1/α) · (σ_r − σ_l)`.
pub fn fit_aggd<T: Scalar>(samples: &[T]) -> Result<AggdParams<T>> {
    check_len(samples.len())?;
    let (mut l_sq, mut l_n, mut r_sq, mut r_n) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for v in samples {
        let v = v.as_f64();
        abs_sum += v.abs();
        sq_sum += v * v;
        if v < 0.0 {
            l_sq += v * v;
            l_n += 1;
        } else if v > 0.0 {
            r_sq += v * v;
            r_n += 1;
        }
    }
    if l_n == 0 || r_n == 0 {
        return Err(Error::DegenerateSeries(
            "asymmetric fit needs samples on both sides of zero".into(),
        ));
    }
    let n = samples.len() as f64;
    let sigma_l = (l_sq / l_n as f64).sqrt();
    let sigma_r = (r_sq / r_n as f64).sqrt();
    let g = sigma_l / sigma_r;
    let mean_abs = abs_sum / n;
    let mean_sq = sq_sum / n;
    let r_hat = mean_abs * mean_abs / mean_sq;
    let big_r = r_hat * (g.powi(3) + 1.0) * (g + 1.0) / (g * g + 1.0).powi(2);
    let alpha = invert_moment_ratio(big_r);
    let eta = gamma(2.0 / alpha) / gamma(1.0 / alpha) * (sigma_r - sigma_l);
    Ok(AggdParams {
        alpha: T::lit(alpha),
        eta: T::lit(eta),
        sigma_l: T::lit(sigma_l),
        sigma_r: T::lit(sigma_r),
    })
}
