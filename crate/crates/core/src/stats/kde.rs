//! Gaussian kernel density estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{quantile_sorted, sorted_copy};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const MIN_KDE_SAMPLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum Bandwidth {
    /// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
    Silverman,
    Fixed(f64),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Self::Silverman
    }
}

/// Density sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve<T> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
    pub bandwidth: T,
}

impl<T: Scalar> DensityCurve<T> {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> T {
        let half = T::lit(0.5);
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| (g[1] - g[0]) * (d[0] + d[1]) * half)
            .sum()
    }
}

/// Silverman's rule of thumb. Falls back to the standard deviation when the
/// IQR is zero but the data are not constant.
pub fn silverman_bandwidth<T: Scalar>(samples: &[T]) -> Result<T> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("bandwidth needs n >= 2, got {n}")));
    }
    let nf = T::from_usize_lossy(n);
    let mean = samples.iter().copied().sum::<T>() / nf;
    let var = samples.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>()
        / T::from_usize_lossy(n - 1);
    let sd = var.sqrt();
    let sorted = sorted_copy(samples);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = {
        let s = sd.min(iqr / T::lit(1.34));
        if s > T::zero() {
            s
        } else {
            sd
        }
    };
    if !(spread > T::zero()) {
        return Err(Error::DegenerateSeries("zero bandwidth (all samples equal)".into()));
    }
    Ok(T::lit(0.9) * spread * nf.powf(T::lit(-0.2)))
}

pub fn linspace<T: Scalar>(lo: T, hi: T, points: usize) -> Vec<T> {
    let step = (hi - lo) / T::from_usize_lossy(points - 1);
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * T::from_usize_lossy(i)
            }
        })
        .collect()
}

/// Gaussian KDE of `samples` with bandwidth `h`, evaluated at `grid`.
pub fn kde_on_grid<T: Scalar>(samples: &[T], h: T, grid: &[T]) -> Vec<T> {
    let norm = T::one()
        / (T::from_usize_lossy(samples.len()) * h * T::lit((2.0 * std::f64::consts::PI).sqrt()));
    let half = T::lit(0.5);
    grid.iter()
        .map(|&g| {
            let s: T = samples
                .iter()
                .map(|&x| {
                    let z = (g - x) / h;
                    (-half * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect()
}

/// Silverman-bandwidth KDE on 512 points spanning `[min - 3h, max + 3h]`.
pub fn kde_estimate<T: Scalar>(samples: &[T]) -> Result<DensityCurve<T>> {
    kde_with(samples, Bandwidth::Silverman, DEFAULT_GRID_POINTS)
}

pub fn kde_with<T: Scalar>(
    samples: &[T],
    bandwidth: Bandwidth,
    grid_points: usize,
) -> Result<DensityCurve<T>> {
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "KDE needs n >= {MIN_KDE_SAMPLES}, got {}",
            samples.len()
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidParam("KDE grid needs at least 2 points".into()));
    }
    let h = resolve_bandwidth(samples, bandwidth)?;
    let (lo, hi) = extent(samples);
    let three = T::lit(3.0);
    let grid = linspace(lo - three * h, hi + three * h, grid_points);
    let density = kde_on_grid(samples, h, &grid);
    Ok(DensityCurve {
        grid,
        density,
        bandwidth: h,
    })
}

pub fn resolve_bandwidth<T: Scalar>(samples: &[T], bandwidth: Bandwidth) -> Result<T> {
    match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(samples),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(T::lit(h)),
        Bandwidth::Fixed(h) => Err(Error::InvalidParam(format!("bandwidth must be > 0, got {h}"))),
    }
}

pub fn extent<T: Scalar>(samples: &[T]) -> (T, T) {
    samples
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn standard_normal_peak() {
        let samples = normal_samples(10_000, 7);
        let kde = kde_estimate(&samples).unwrap();
        let at_zero = kde_on_grid(&samples, kde.bandwidth, &[0.0])[0];
        let analytic = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((at_zero - analytic).abs() < 0.02, "{at_zero}");
        assert!((kde.integral() - 1.0).abs() < 1e-3);
        assert_eq!(kde.grid.len(), 512);
    }

    #[test]
    fn silverman_matches_hand_computation() {
        // sd = sqrt(2.5), IQR = 2 -> min(1.5811, 1.4925) = 1.4925
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let h = silverman_bandwidth(&x).unwrap();
        let expected = 0.9 * (2.0 / 1.34) * 5f64.powf(-0.2);
        assert!((h - expected).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kde_estimate(&[1.0, 2.0, 3.0, 4.0]),
            Err(Error::InsufficientSamples(_))
        ));
        assert!(matches!(
            kde_estimate(&[2.0; 8]),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn translation_equivariance() {
        let samples = normal_samples(500, 3);
        let c = 12.5;
        let shifted: Vec<f64> = samples.iter().map(|v| v + c).collect();
        let a = kde_estimate(&samples).unwrap();
        let b = kde_estimate(&shifted).unwrap();
        for i in 0..a.grid.len() {
            assert!((a.grid[i] + c - b.grid[i]).abs() < 1e-9);
            assert!((a.density[i] - b.density[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn serializes_to_plot_schema() {
        let kde = kde_estimate(&[1.0, 2.0, 2.5, 3.0, 4.5]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&kde).unwrap();
        assert_eq!(v["grid"].as_array().unwrap().len(), 512);
        assert_eq!(v["density"].as_array().unwrap().len(), 512);
        assert!(v["bandwidth"].as_f64().unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn density_nonnegative_and_normalized(
            seed in 0u64..1000, n in 5usize..400, loc in -1e3f64..1e3, scale in 1e-3f64..1e3,
        ) {
            let samples: Vec<f64> = normal_samples(n, seed).iter().map(|v| loc + scale * v).collect();
            let kde = kde_estimate(&samples).unwrap();
            prop_assert!(kde.density.iter().all(|&d| d >= 0.0));
            prop_assert!((kde.integral() - 1.0).abs() < 1e-3);
            prop_assert!(kde.grid.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
