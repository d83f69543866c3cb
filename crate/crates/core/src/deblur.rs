//! Separable 2D application of the deblurring kernel with entropy-adaptive
//! strength and an optional decoupled smoothing pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::InverseDesign;
use crate::error::{invalid, Result};
use crate::image::ImagePlane;
use crate::kernel::{sample_gg_kernel, FirKernel, GeneralizedGaussianPsf};

/// Default entropy threshold `T`, in nats.
pub const DEFAULT_ENTROPY_THRESHOLD: f64 = 0.5;
pub const ENTROPY_BINS: usize = 256;

/// Half-sample symmetric extension: `x[-1] = x[0]`, `x[n] = x[n-1]`,
/// repeated periodically for indices further out.
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = i.rem_euclid(2 * n);
    (if j >= n { 2 * n - 1 - j } else { j }) as usize
}

fn check_fits(kernel: &FirKernel, extent: usize, axis: &str) -> Result<()> {
    if kernel.len() > extent {
        return invalid(format!(
            "{}-tap kernel is longer than the image {axis} ({extent})",
            kernel.len()
        ));
    }
    Ok(())
}

/// Convolves every row with `kernel`.
pub fn convolve_rows(image: &ImagePlane, kernel: &FirKernel) -> Result<ImagePlane> {
    check_fits(kernel, image.width(), "width")?;
    Ok(rows_pass(image, kernel))
}

/// Convolves every column with `kernel`.
pub fn convolve_cols(image: &ImagePlane, kernel: &FirKernel) -> Result<ImagePlane> {
    check_fits(kernel, image.height(), "height")?;
    Ok(cols_pass(image, kernel))
}

/// Separable convolution without the length check, for internal filters
/// that may be longer than a small image.
pub(crate) fn convolve_unchecked(image: &ImagePlane, kx: &FirKernel, ky: &FirKernel) -> ImagePlane {
    cols_pass(&rows_pass(image, kx), ky)
}

fn rows_pass(image: &ImagePlane, kernel: &FirKernel) -> ImagePlane {
    let (w, h) = (image.width(), image.height());
    let taps = kernel.taps();
    let m = kernel.half_width();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        let src = image.row(y);
        let padded: Vec<f64> = (-(m as isize)..(w + m) as isize)
            .map(|i| src[mirror(i, w)])
            .collect();
        for (x, d) in dst.iter_mut().enumerate() {
            let window = &padded[x..x + taps.len()];
            *d = window.iter().zip(taps).fold(0.0, |acc, (v, t)| acc + t * v);
        }
    });
    ImagePlane::from_parts(w, h, out, image.bit_depth())
}

fn cols_pass(image: &ImagePlane, kernel: &FirKernel) -> ImagePlane {
    let (w, h) = (image.width(), image.height());
    let taps = kernel.taps();
    let m = kernel.half_width() as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        for (k, &t) in taps.iter().enumerate() {
            let src = image.row(mirror(y as isize + k as isize - m, h));
            for (d, v) in dst.iter_mut().zip(src) {
                *d += t * v;
            }
        }
    });
    ImagePlane::from_parts(w, h, out, image.bit_depth())
}

/// Rows with `kx`, then columns with `ky`, mirror boundaries, same output size.
pub fn separable_convolve(image: &ImagePlane, kx: &FirKernel, ky: &FirKernel) -> Result<ImagePlane> {
    check_fits(kx, image.width(), "width")?;
    check_fits(ky, image.height(), "height")?;
    convolve_cols(&convolve_rows(image, kx)?, ky)
}

/// Edge image f∗D_x + f∗D_y + f∗D_x∗D_y for a zero-sum symmetric `d`.
pub fn deblur_edges(image: &ImagePlane, d: &FirKernel) -> Result<ImagePlane> {
    let scale: f64 = d.taps().iter().map(|t| t.abs()).sum();
    if d.sum().abs() > 1e-9 * scale.max(1.0) {
        return invalid("deblurring kernel must sum to zero");
    }
    check_fits(d, image.width(), "width")?;
    check_fits(d, image.height(), "height")?;
    let dx = convolve_rows(image, d)?;
    let dy = convolve_cols(image, d)?;
    let dxy = convolve_cols(&dx, d)?;
    let samples = dx
        .samples()
        .iter()
        .zip(dy.samples())
        .zip(dxy.samples())
        .map(|((a, b), c)| a + b + c)
        .collect();
    Ok(ImagePlane::from_parts(
        image.width(),
        image.height(),
        samples,
        image.bit_depth(),
    ))
}

/// Shannon entropy (nats) of a histogram with `bins` equal-width bins over
/// the plane's own `[min, max]` range.
pub fn image_entropy(image: &ImagePlane, bins: usize) -> f64 {
    let bins = bins.max(1);
    let (lo, hi) = image
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in image.samples() {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = image.samples().len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// γ = clamp(E(f_B) / (E(edges) + T), 0, 1).
pub fn adaptive_gamma(blurred: &ImagePlane, edges: &ImagePlane, threshold: f64) -> f64 {
    let ratio =
        image_entropy(blurred, ENTROPY_BINS) / (image_entropy(edges, ENTROPY_BINS) + threshold);
    if ratio.is_nan() {
        0.0
    } else {
        ratio.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaMode {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    gamma: f64,
    entropy_threshold: f64,
    mode: GammaMode,
}

impl TuningParams {
    pub fn adaptive(entropy_threshold: f64) -> Result<Self> {
        if !(entropy_threshold > 0.0 && entropy_threshold.is_finite()) {
            return invalid(format!(
                "entropy threshold must be positive, got {entropy_threshold}"
            ));
        }
        Ok(Self {
            gamma: 1.0,
            entropy_threshold,
            mode: GammaMode::Adaptive,
        })
    }

    /// Fixed strength; values outside `[0, 1]` are clamped.
    pub fn fixed(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return invalid("gamma must be finite");
        }
        Ok(Self {
            gamma: gamma.clamp(0.0, 1.0),
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            mode: GammaMode::Fixed,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn entropy_threshold(&self) -> f64 {
        self.entropy_threshold
    }

    pub fn mode(&self) -> GammaMode {
        self.mode
    }
}

impl Default for TuningParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            mode: GammaMode::Adaptive,
        }
    }
}

/// A deblurred plane together with the strength that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Deblurred {
    pub image: ImagePlane,
    pub gamma: f64,
}

/// f_R = f_B + γ·∇_D f_B, optionally smoothed, without the final clip.
pub fn deblur_unclipped(
    image: &ImagePlane,
    design: &InverseDesign,
    params: &TuningParams,
    denoise: Option<&GeneralizedGaussianPsf>,
) -> Result<Deblurred> {
    let denoise_kernel = match denoise {
        Some(psf) => {
            if psf.scale >= design.source_psf.scale {
                return invalid(format!(
                    "denoise scale {} must be smaller than the blur scale {}",
                    psf.scale, design.source_psf.scale
                ));
            }
            Some(sample_gg_kernel(psf)?)
        }
        None => None,
    };
    let edges = deblur_edges(image, &design.deblur_kernel)?;
    let gamma = match params.mode {
        GammaMode::Fixed => params.gamma,
        GammaMode::Adaptive => adaptive_gamma(image, &edges, params.entropy_threshold),
    };
    let mut restored = image.add_scaled(&edges, gamma)?;
    if let Some(k) = denoise_kernel {
        restored = separable_convolve(&restored, &k, &k)?;
    }
    Ok(Deblurred {
        image: restored,
        gamma,
    })
}

/// Like [`deblur`] but also reports the strength used.
pub fn deblur_detailed(
    image: &ImagePlane,
    design: &InverseDesign,
    params: &TuningParams,
    denoise: Option<&GeneralizedGaussianPsf>,
) -> Result<Deblurred> {
    let out = deblur_unclipped(image, design, params, denoise)?;
    Ok(Deblurred {
        image: out.image.clipped(),
        gamma: out.gamma,
    })
}

/// Deblurs one plane and clips the result to `[0, 1]`.
pub fn deblur(
    image: &ImagePlane,
    design: &InverseDesign,
    params: &TuningParams,
    denoise: Option<&GeneralizedGaussianPsf>,
) -> Result<ImagePlane> {
    deblur_detailed(image, design, params, denoise).map(|d| d.image)
}
