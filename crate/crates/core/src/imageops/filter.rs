use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Gray;

/// Dense 2-D stencil with odd side lengths, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::InvalidParam(format!(
                "kernel sides must be odd, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidParam("kernel data length mismatch".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        let data = rows.iter().flatten().map(|&v| T::lit(v)).collect();
        Self::new(N, N, data)
    }

    /// Four-neighbour Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]`.
    pub fn laplacian() -> Self {
        Self::from_rows([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]).unwrap()
    }

    pub fn identity3() -> Self {
        Self::from_rows([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]).unwrap()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Valid-region correlation (no kernel flip).
pub fn convolve2d<T: Scalar>(img: &Gray<T>, kernel: &Kernel<T>) -> Result<Gray<T>> {
    let (kw, kh) = (kernel.width, kernel.height);
    if kw > img.width() || kh > img.height() {
        return Err(Error::InvalidSize(format!(
            "kernel {kw}x{kh} larger than image {}x{}",
            img.width(),
            img.height()
        )));
    }
    let ow = img.width() - kw + 1;
    let oh = img.height() - kh + 1;
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = T::zero();
            for ky in 0..kh {
                let row = &img.row(y + ky)[x..x + kw];
                let krow = &kernel.data[ky * kw..(ky + 1) * kw];
                for (&p, &k) in row.iter().zip(krow) {
                    acc += p * k;
                }
            }
            out.push(acc);
        }
    }
    Ok(Gray::from_fn(ow, oh, |x, y| out[y * ow + x]))
}

/// Half-sample symmetric extension (`d c b a | a b c d | d c b a`), valid for
/// any offset.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

/// Normalized 1-D Gaussian taps on `[-radius, radius]`.
pub fn gaussian_kernel_1d<T: Scalar>(sigma: f64, radius: usize) -> Vec<T> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / total)).collect()
}

/// Applies a symmetric odd-length 1-D kernel along rows then columns with
/// symmetric boundary extension. Output has the input size.
pub fn filter_separable_reflect<T: Scalar>(img: &Gray<T>, taps: &[T]) -> Gray<T> {
    let (w, h) = (img.width(), img.height());
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = img.row(y);
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc += t * row[reflect_index(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for (k, &t) in taps.iter().enumerate() {
            let sy = reflect_index(y as isize + k as isize - r, h);
            let src = &tmp[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    Gray::from_fn(w, h, |x, y| out[y * w + x])
}

/// Separable Gaussian blur, radius `ceil(3 sigma)`, symmetric boundary
/// extension. `sigma == 0` returns the input unchanged.
pub fn gaussian_blur<T: Scalar>(img: &Gray<T>, sigma: f64) -> Result<Gray<T>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let taps = gaussian_kernel_1d::<T>(sigma, radius);
    Ok(filter_separable_reflect(img, &taps))
}
