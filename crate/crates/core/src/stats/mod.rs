//! Correlation, normalization, density estimation and natural-scene-statistics fits.

pub mod correlation;
pub mod kde;
pub mod mvg;
pub mod nss;

pub use correlation::{average_ranks, pcc, srcc};
pub use kde::{kde_estimate, kde_on_grid, kde_with, silverman_bandwidth, Bandwidth, DensityCurve};
pub use mvg::{fit_mvg, mvg_distance, MvgModel};
pub use nss::{fit_aggd, fit_ggd, ggd_moment_ratio, AggdParams, GgdParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observed range used for min-max scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of<T: Scalar>(values: &[T]) -> Result<Self> {
        let mut it = values.iter().map(|v| v.as_f64());
        let first = it
            .next()
            .ok_or_else(|| Error::DegenerateSeries("empty series".into()))?;
        let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(max > min) {
            return Err(Error::DegenerateSeries(format!("constant series ({min})")));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }
}

/// `(v - min) / (max - min)` over the series' own range.
pub fn minmax_normalize<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    let mut it = values.iter().copied();
    let first = it
        .next()
        .ok_or_else(|| Error::DegenerateSeries("empty series".into()))?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateSeries("constant series".into()));
    }
    let span = hi - lo;
    Ok(values.iter().map(|&v| (v - lo) / span).collect())
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len())
}

/// Linear-interpolation quantile of ascending-sorted data (R type 7).
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn sorted_copy<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

pub fn median<T: Scalar>(values: &[T]) -> T {
    quantile_sorted(&sorted_copy(values), 0.5)
}
