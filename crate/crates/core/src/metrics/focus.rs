//! Laplacian-based focus measures.

use crate::error::Result;
use crate::imageops::{convolve2d, Gray, Kernel};
use crate::scalar::Scalar;

/// Population variance of the four-neighbour Laplacian over the valid region.
pub fn lapv<T: Scalar>(img: &Gray<T>) -> Result<T> {
    img.require_min(3, 3, "lapv")?;
    Ok(convolve2d(img, &Kernel::laplacian())?.variance())
}

/// Mean modified Laplacian over interior pixels:
/// `|2f - f(x-1,y) - f(x+1,y)| + |2f - f(x,y-1) - f(x,y+1)|`.
///
/// The mean (rather than the sum) keeps the score independent of image area.
pub fn lapm<T: Scalar>(img: &Gray<T>) -> Result<T> {
    img.require_min(3, 3, "lapm")?;
    let (w, h) = (img.width(), img.height());
    let two = T::lit(2.0);
    let mut acc = T::zero();
    for y in 1..h - 1 {
        let (up, row, down) = (img.row(y - 1), img.row(y), img.row(y + 1));
        for x in 1..w - 1 {
            let c = two * row[x];
            acc += (c - row[x - 1] - row[x + 1]).abs() + (c - up[x] - down[x]).abs();
        }
    }
    Ok(acc / T::from_usize_lossy((w - 2) * (h - 2)))
}
