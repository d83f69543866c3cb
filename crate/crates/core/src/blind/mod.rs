//! Blind estimation of the blur scale from a single image.
//!
//! The image is compared with an anti-aliased `s`-fold downsample of itself:
//! blur shows up as a characteristic fall-off of the ratio between their
//! radial spectra, which is fitted with a Gaussian or Laplacian model.

pub mod fit;
pub mod model;
pub mod spectrum;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{fit_gaussian_model, fit_laplacian_model, fit_model, BlurEstimate};
pub use model::{
    laplacian_constants, laplacian_radial_model, laplacian_radial_model_with,
    laplacian_ring_integral, BlurModel, LaplacianForm,
};
pub use spectrum::{
    antialias_downsample, antialias_kernel, radial_spectrum, ratio_spectrum, RadialSpectrum,
    RatioSpectrum, DEFAULT_BINS,
};

use crate::error::{invalid, Result};
use crate::image::{Image, ImagePlane};

/// Spectra computed along the way to an estimate, for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnalysis {
    pub original: RadialSpectrum,
    pub downsampled: RadialSpectrum,
    pub ratio: RatioSpectrum,
}

/// Radial spectra of `image` and its `s`-fold downsample, and their ratio.
pub fn analyze_spectrum(image: &ImagePlane, s: usize, bins: usize) -> Result<SpectrumAnalysis> {
    let original = radial_spectrum(image, bins)?;
    let down = antialias_downsample(image, s)?;
    let downsampled = radial_spectrum(&down, bins)?;
    let ratio = ratio_spectrum(&original, &downsampled, s as f64)?;
    Ok(SpectrumAnalysis {
        original,
        downsampled,
        ratio,
    })
}

/// Estimates the blur of one plane.
pub fn estimate_plane(
    image: &ImagePlane,
    model: BlurModel,
    s: usize,
    bins: usize,
) -> Result<BlurEstimate> {
    let analysis = analyze_spectrum(image, s, bins)?;
    fit_model(&analysis.ratio, model)
}

/// Per-channel estimates and the median scale consumed downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEstimate {
    pub model: BlurModel,
    pub scale_factor: usize,
    pub per_channel: Vec<BlurEstimate>,
    /// Median α across channels.
    pub alpha: f64,
    /// Median c′ across channels.
    pub noise_coeff: f64,
    /// Median fit residual across channels.
    pub fit_residual: f64,
}

/// Estimates every channel independently (in parallel) and takes medians.
pub fn estimate_image(image: &Image, model: BlurModel, s: usize, bins: usize) -> Result<ImageEstimate> {
    if s < 2 {
        return invalid(format!("scale factor must be at least 2, got {s}"));
    }
    let per_channel = image
        .channels()
        .par_iter()
        .map(|c| estimate_plane(c, model, s, bins))
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&BlurEstimate) -> f64| median(per_channel.iter().map(f).collect());
    Ok(ImageEstimate {
        model,
        scale_factor: s,
        alpha: pick(|e| e.alpha),
        noise_coeff: pick(|e| e.noise_coeff),
        fit_residual: pick(|e| e.fit_residual),
        per_channel,
    })
}

/// Median; the mean of the two middle values for even counts.
pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of an empty set");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
