//! Full-reference quality scores and spectral summaries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::blind::spectrum::{radial_spectrum, RadialSpectrum};
use crate::deblur::{image_entropy, ENTROPY_BINS};
use crate::error::{invalid, Result};
use crate::image::ImagePlane;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_same_shape(a: &ImagePlane, b: &ImagePlane) -> Result<()> {
    if !a.same_shape(b) {
        return invalid(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ));
    }
    Ok(())
}

pub fn mse(reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
    check_same_shape(reference, test)?;
    let sum: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.samples().len() as f64)
}

/// Peak signal-to-noise ratio for unit-range images; `+∞` when identical.
pub fn psnr(reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
    let e = mse(reference, test)?;
    Ok(if e == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * e.log10()
    })
}

fn gaussian_window() -> Vec<f64> {
    let m = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - m;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// Separable filtering over the "valid" region only (no boundary handling).
fn filter_valid(samples: &[f64], width: usize, height: usize, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let (ow, oh) = (width + 1 - n, height + 1 - n);
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let src = &samples[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = w.iter().zip(&src[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (k, &t) in w.iter().enumerate() {
            let src = &rows[(y + k) * ow..(y + k + 1) * ow];
            for (d, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *d += t * v;
            }
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// K1 = 0.01 and K2 = 0.03 on unit range, over the valid region.
pub fn ssim(reference: &ImagePlane, test: &ImagePlane) -> Result<f64> {
    check_same_shape(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} samples, got {w}x{h}"
        ));
    }
    let win = gaussian_window();
    let (x, y) = (reference.samples(), test.samples());
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(&a, &b)| f(a, b)).collect() };
    let mu_x = filter_valid(x, w, h, &win);
    let mu_y = filter_valid(y, w, h, &win);
    let xx = filter_valid(&prod(|a, _| a * a), w, h, &win);
    let yy = filter_valid(&prod(|_, b| b * b), w, h, &win);
    let xy = filter_valid(&prod(|a, b| a * b), w, h, &win);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

/// Share of the radial spectrum in rings at or above π/2.
pub fn highband_energy_ratio(spectrum: &RadialSpectrum) -> f64 {
    let total: f64 = spectrum.values.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let high: f64 = spectrum
        .values
        .iter()
        .zip(&spectrum.bin_edges)
        .filter(|(_, &lo)| lo >= PI / 2.0 - 1e-12)
        .map(|(v, _)| v)
        .sum();
    high / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// `+∞` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
    /// Histogram entropy of the test image, in nats.
    pub entropy_nats: f64,
    /// High-band share of the test image's radial spectrum.
    pub highband_energy_ratio: f64,
}

/// Scores `test` against `reference`.
pub fn quality_report(reference: &ImagePlane, test: &ImagePlane, bins: usize) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr_db: psnr(reference, test)?,
        ssim: ssim(reference, test)?,
        entropy_nats: image_entropy(test, ENTROPY_BINS),
        highband_energy_ratio: highband_energy_ratio(&radial_spectrum(test, bins)?),
    })
}
