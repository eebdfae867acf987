//! Deterministic synthetic images for benches, fixtures and tests.

use crate::imageops::Gray;
use crate::rng::SeededRng;

/// Textured scene: oriented gratings, a few hard-edged blocks and mild
/// noise, clamped to `[0, 255]`.
pub fn texture(width: usize, height: usize, seed: u64) -> Gray<f64> {
    let mut rng = SeededRng::new(seed, 0);
    let gratings: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let freq = 0.08 + 0.9 * rng.uniform();
            let theta = std::f64::consts::PI * rng.uniform();
            let phase = 2.0 * std::f64::consts::PI * rng.uniform();
            let amp = 10.0 + 20.0 * rng.uniform();
            (freq * theta.cos(), freq * theta.sin(), phase, amp)
        })
        .collect();
    let blocks: Vec<(f64, f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            let x0 = rng.uniform() * width as f64;
            let y0 = rng.uniform() * height as f64;
            let w = (0.1 + 0.3 * rng.uniform()) * width as f64;
            let h = (0.1 + 0.3 * rng.uniform()) * height as f64;
            let v = 60.0 * (rng.uniform() - 0.5);
            (x0, y0, w, h, v)
        })
        .collect();
    let noise: Vec<f64> = (0..width * height).map(|_| 4.0 * rng.normal()).collect();
    Gray::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 128.0;
        for &(fx, fy, ph, amp) in &gratings {
            v += amp * (fx * xf + fy * yf + ph).sin();
        }
        for &(x0, y0, w, h, val) in &blocks {
            if xf >= x0 && xf < x0 + w && yf >= y0 && yf < y0 + h {
                v += val;
            }
        }
        (v + noise[y * width + x]).clamp(0.0, 255.0)
    })
}

/// i.i.d. Gaussian pixels, clamped to `[0, 255]`.
pub fn gaussian_noise(width: usize, height: usize, mean: f64, sd: f64, seed: u64) -> Gray<f64> {
    let mut rng = SeededRng::new(seed, 0);
    Gray::from_fn(width, height, |_, _| (mean + sd * rng.normal()).clamp(0.0, 255.0))
}

/// i.i.d. uniform pixels on `[0, 255)`: a stationary texture whose
/// statistics do not depend on the crop window.
pub fn uniform_noise(width: usize, height: usize, seed: u64) -> Gray<f64> {
    let mut rng = SeededRng::new(seed, 0);
    Gray::from_fn(width, height, |_, _| 255.0 * rng.uniform())
}
