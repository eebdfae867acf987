//! Multivariate Gaussian models and the pooled-covariance distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvgModel {
    pub mean: Vec<f64>,
    /// Row-major `d x d` sample covariance.
    pub cov: Vec<Vec<f64>>,
}

impl MvgModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.cov[i][j])
    }
}

/// Sample mean and symmetrized `n - 1` covariance. Requires `n >= 2 d`.
pub fn fit_mvg<T: Scalar>(rows: &[Vec<T>]) -> Result<MvgModel> {
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InsufficientSamples("no feature rows".into()));
    }
    if rows.len() < 2 * d {
        return Err(Error::InsufficientSamples(format!(
            "MVG fit needs at least {} rows for dimension {d}, got {}",
            2 * d,
            rows.len()
        )));
    }
    fit_unchecked(rows)
}

/// Same estimator as [`fit_mvg`] but only requires two rows.
pub(crate) fn fit_unchecked<T: Scalar>(rows: &[Vec<T>]) -> Result<MvgModel> {
    let d = rows.first().map_or(0, Vec::len);
    if rows.len() < 2 {
        return Err(Error::InsufficientSamples("covariance needs at least 2 rows".into()));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParam("ragged feature rows".into()));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v.as_f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; d]; d];
    let mut dev = vec![0.0; d];
    for r in rows {
        for (k, v) in r.iter().enumerate() {
            dev[k] = v.as_f64() - mean[k];
        }
        for i in 0..d {
            for j in i..d {
                cov[i][j] += dev[i] * dev[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i][j] / (n - 1.0);
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    Ok(MvgModel { mean, cov })
}

/// `sqrt((m1 - m2)^T ((S1 + S2) / 2)^+ (m1 - m2))` with a symmetric
/// eigen-decomposition pseudo-inverse; eigenvalues below
/// `d * λ_max * ε` (or negative) are dropped.
pub fn mvg_distance(a: &MvgModel, b: &MvgModel) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParam(format!(
            "model dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let pooled = (a.cov_matrix() + b.cov_matrix()) * 0.5;
    let pooled = (&pooled + pooled.transpose()) * 0.5;
    let diff = DVector::from_iterator(d, a.mean.iter().zip(&b.mean).map(|(x, y)| x - y));
    let eig = SymmetricEigen::new(pooled);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let tol = d as f64 * lmax * f64::EPSILON;
    let proj = eig.eigenvectors.transpose() * diff;
    let q: f64 = proj
        .iter()
        .zip(eig.eigenvalues.iter())
        .filter(|(_, &l)| l > tol)
        .map(|(p, &l)| p * p / l)
        .sum();
    Ok(q.max(0.0).sqrt())
}
