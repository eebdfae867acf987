//! Luminance images, filtering and augmentation series.

mod augment;
mod filter;

pub use augment::{
    blur_series, crop_series, rotate_bilinear, rotation_series, rotation_series_with,
    write_series, AugmentationKind, AugmentationSeries, SeriesSidecar, CROP_STEPS,
    DEFAULT_BLUR_SIGMAS, ROTATION_ANGLES,
};
pub use filter::{
    convolve2d, filter_separable_reflect, gaussian_blur, gaussian_kernel_1d, reflect_index,
    Kernel,
};

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, RgbImage};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major luminance field. Samples are nominally on the `[0, 255]` scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Gray<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Gray<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.data.len())
    }

    /// Population variance of the samples.
    pub fn variance(&self) -> T {
        let m = self.mean();
        let ss: T = self.data.iter().map(|&v| (v - m) * (v - m)).sum();
        ss / T::from_usize_lossy(self.data.len())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Gray<U> {
        Gray {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidSize(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Largest centered square.
    pub fn center_square(&self) -> Self {
        let side = self.width.min(self.height);
        let x0 = (self.width - side) / 2;
        let y0 = (self.height - side) / 2;
        self.crop(x0, y0, side, side).expect("square fits")
    }

    pub(crate) fn require_min(&self, min_w: usize, min_h: usize, what: &str) -> Result<()> {
        if self.width < min_w || self.height < min_h {
            return Err(Error::InvalidSize(format!(
                "{what} needs at least {min_w}x{min_h}, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Rounds and clamps to 8-bit luminance.
    pub fn to_luma8(&self) -> ImageBuffer<Luma<u8>, Vec<u8>> {
        let bytes = self
            .data
            .iter()
            .map(|v| v.as_f64().round().clamp(0.0, 255.0) as u8)
            .collect();
        ImageBuffer::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer matches dimensions")
    }
}

/// Rec. 601 luma of an 8-bit RGB image, kept in floating point.
pub fn to_grayscale<T: Scalar>(rgb: &RgbImage) -> Result<Gray<T>> {
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::InvalidImage(format!("zero-sized image {w}x{h}")));
    }
    let data = rgb
        .pixels()
        .map(|p| T::lit(luma601(p[0] as f64, p[1] as f64, p[2] as f64)))
        .collect();
    Gray::new(w as usize, h as usize, data)
}

#[inline]
fn luma601(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Converts a decoded image to luminance on the `[0, 255]` scale.
///
/// 8-bit inputs use their channel values directly; deeper inputs are rescaled.
pub fn dynamic_to_gray<T: Scalar>(img: &DynamicImage) -> Result<Gray<T>> {
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            Gray::new(
                w as usize,
                h as usize,
                g.as_raw().iter().map(|&v| T::lit(v as f64)).collect(),
            )
        }
        DynamicImage::ImageRgb8(rgb) => to_grayscale(rgb),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => to_grayscale(&img.to_rgb8()),
        _ => {
            let rgb = img.to_rgb32f();
            let (w, h) = rgb.dimensions();
            let data = rgb
                .pixels()
                .map(|p| {
                    T::lit(luma601(
                        p[0] as f64 * 255.0,
                        p[1] as f64 * 255.0,
                        p[2] as f64 * 255.0,
                    ))
                })
                .collect();
            Gray::new(w as usize, h as usize, data)
        }
    }
}

pub fn load_gray<T: Scalar>(path: &Path) -> Result<Gray<T>> {
    let img = image::open(path)?;
    dynamic_to_gray(&img)
}

pub fn save_png<T: Scalar>(img: &Gray<T>, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    img.to_luma8()
        .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    crate::io::atomic_write(path, &bytes)
}

/// Lists PNG/JPEG files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Image identifier derived from a path: the file stem.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
