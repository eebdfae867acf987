//! One-level 2-D discrete wavelet transform and the wavelet focus measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageops::Gray;
use crate::scalar::Scalar;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Daubechies-6 (12-tap) decomposition low-pass filter.
const DB6_LO: [f64; 12] = [
    -0.0010773010853084796,
    0.004777257510945511,
    0.0005538422011614961,
    -0.03158203931748603,
    0.027522865530305727,
    0.09750160558732304,
    -0.12976686756726194,
    -0.22626469396543983,
    0.31525035170919763,
    0.7511339080210954,
    0.49462389039845306,
    0.11154074335008017,
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    #[default]
    Db6,
}

impl Wavelet {
    /// Decomposition filters `(low, high)` with `high[n] = (-1)^(n+1) low[L-1-n]`.
    pub fn filters(self) -> (Vec<f64>, Vec<f64>) {
        let lo: Vec<f64> = match self {
            Wavelet::Haar => vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Wavelet::Db6 => DB6_LO.to_vec(),
        };
        let len = lo.len();
        let hi = (0..len)
            .map(|n| {
                let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
                sign * lo[len - 1 - n]
            })
            .collect();
        (lo, hi)
    }

    pub fn support(self) -> usize {
        match self {
            Wavelet::Haar => 2,
            Wavelet::Db6 => DB6_LO.len(),
        }
    }
}

/// First-level subbands. `lh` is horizontal detail (low along rows, high
/// along columns), `hl` vertical detail, `hh` diagonal.
#[derive(Clone, Debug)]
pub struct Subbands<T> {
    pub ll: Gray<T>,
    pub lh: Gray<T>,
    pub hl: Gray<T>,
    pub hh: Gray<T>,
}

/// Periodized analysis step: `out[k] = Σ_j f[j] x[(2k + L/2 - j) mod N]`.
fn analyze<T: Scalar>(x: &[T], filter: &[T], out: &mut [T]) {
    let n = x.len();
    let half = filter.len() / 2;
    for (k, o) in out.iter_mut().enumerate() {
        let base = 2 * k + half + n * filter.len();
        let mut acc = T::zero();
        for (j, &f) in filter.iter().enumerate() {
            acc += f * x[(base - j) % n];
        }
        *o = acc;
    }
}

/// Single-level periodic 2-D DWT. Odd dimensions are cropped by one.
pub fn dwt2<T: Scalar>(img: &Gray<T>, wavelet: Wavelet) -> Result<Subbands<T>> {
    let w = img.width() & !1;
    let h = img.height() & !1;
    let support = wavelet.support();
    if w < support || h < support {
        return Err(Error::InvalidSize(format!(
            "{wavelet:?} needs at least {support}x{support}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let (lo, hi) = wavelet.filters();
    let lo: Vec<T> = lo.into_iter().map(T::lit).collect();
    let hi: Vec<T> = hi.into_iter().map(T::lit).collect();
    let (hw, hh) = (w / 2, h / 2);

    // rows
    let mut row_lo = vec![T::zero(); hw * h];
    let mut row_hi = vec![T::zero(); hw * h];
    for y in 0..h {
        let row = &img.row(y)[..w];
        analyze(row, &lo, &mut row_lo[y * hw..(y + 1) * hw]);
        analyze(row, &hi, &mut row_hi[y * hw..(y + 1) * hw]);
    }

    // columns
    let columns = |src: &[T], filter: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); hw * hh];
        let mut col = vec![T::zero(); h];
        let mut res = vec![T::zero(); hh];
        for x in 0..hw {
            for y in 0..h {
                col[y] = src[y * hw + x];
            }
            analyze(&col, filter, &mut res);
            for y in 0..hh {
                out[y * hw + x] = res[y];
            }
        }
        out
    };
    let wrap = |data: Vec<T>| Gray::from_fn(hw, hh, |x, y| data[y * hw + x]);
    Ok(Subbands {
        ll: wrap(columns(&row_lo, &lo)),
        lh: wrap(columns(&row_lo, &hi)),
        hl: wrap(columns(&row_hi, &lo)),
        hh: wrap(columns(&row_hi, &hi)),
    })
}

/// Mean absolute first-level detail coefficient (Daubechies-6).
pub fn wavs<T: Scalar>(img: &Gray<T>) -> Result<T> {
    wavs_with(img, Wavelet::Db6)
}

pub fn wavs_with<T: Scalar>(img: &Gray<T>, wavelet: Wavelet) -> Result<T> {
    let bands = dwt2(img, wavelet)?;
    let details = [&bands.lh, &bands.hl, &bands.hh];
    let total: T = details
        .iter()
        .flat_map(|b| b.data().iter().map(|v| v.abs()))
        .sum();
    let count: usize = details.iter().map(|b| b.len()).sum();
    Ok(total / T::from_usize_lossy(count))
}
