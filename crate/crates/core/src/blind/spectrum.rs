use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::deblur::convolve_unchecked;
use crate::error::{invalid, DeblurError, Result};
use crate::image::ImagePlane;
use crate::kernel::FirKernel;

pub const DEFAULT_BINS: usize = 64;
pub const MIN_BINS: usize = 16;
pub const MIN_SPECTRUM_SIDE: usize = 32;
pub const ANTIALIAS_TAPS: usize = 17;
/// Minimum number of non-DC bins a ratio spectrum must keep.
pub const MIN_VALID_BINS: usize = 8;
/// Bins whose denominator falls below this fraction of the peak are dropped.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Mean Fourier amplitude in rings of equal width over `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSpectrum {
    /// `bins + 1` ring boundaries from 0 to π.
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of frequency samples that fell in each ring.
    pub counts: Vec<usize>,
    pub bin_width: f64,
}

impl RadialSpectrum {
    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// R(r) on the bins where both spectra are usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSpectrum {
    /// Index of each retained bin in the source spectra.
    pub bins: Vec<usize>,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub scale_factor: f64,
}

impl RatioSpectrum {
    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// The `(r, R)` pairs used for model fitting: everything but the DC bin.
    pub fn fit_points(&self) -> (Vec<f64>, Vec<f64>) {
        self.bins
            .iter()
            .zip(self.radii.iter().zip(&self.ratios))
            .filter(|(b, _)| **b != 0)
            .map(|(_, (r, v))| (*r, *v))
            .unzip()
    }
}

/// Forward 2D DFT of a plane, row-major, unnormalized.
pub(crate) fn fft2(image: &ImagePlane) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = image
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform2(&mut data, image.width(), image.height(), false);
    data
}

/// In-place 2D DFT of a row-major `width × height` buffer.
pub(crate) fn transform2(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    data.par_chunks_mut(width).for_each(|row| row_fft.process(row));
    let mut cols = vec![Complex64::new(0.0, 0.0); width * height];
    for y in 0..height {
        for x in 0..width {
            cols[x * height + y] = data[y * width + x];
        }
    }
    cols.par_chunks_mut(height).for_each(|col| col_fft.process(col));
    for x in 0..width {
        for y in 0..height {
            data[y * width + x] = cols[x * height + y];
        }
    }
}

/// Angular frequency of DFT index `k` on an `n`-point grid, in `(-π, π]`.
pub(crate) fn dft_frequency(k: usize, n: usize) -> f64 {
    let signed = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / n as f64
}

/// Averages `|F{f}| / (W·H)` over rings of width π/`bins`.
///
/// Frequencies with radius above π (the corners of the DFT grid) are
/// ignored; a ring that receives no samples holds zero.
pub fn radial_spectrum(image: &ImagePlane, bins: usize) -> Result<RadialSpectrum> {
    let (w, h) = (image.width(), image.height());
    if w < MIN_SPECTRUM_SIDE || h < MIN_SPECTRUM_SIDE {
        return invalid(format!(
            "radial spectrum needs at least {MIN_SPECTRUM_SIDE}x{MIN_SPECTRUM_SIDE} samples, got {w}x{h}"
        ));
    }
    if bins < MIN_BINS {
        return invalid(format!("need at least {MIN_BINS} radial bins, got {bins}"));
    }
    let spectrum = fft2(image);
    let norm = (w * h) as f64;
    let width = PI / bins as f64;
    let wx: Vec<f64> = (0..w).map(|k| dft_frequency(k, w)).collect();
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for y in 0..h {
        let wy = dft_frequency(y, h);
        for (x, &fx) in wx.iter().enumerate() {
            let r = (fx * fx + wy * wy).sqrt();
            if r > PI {
                continue;
            }
            let b = ((r / width) as usize).min(bins - 1);
            sums[b] += spectrum[y * w + x].norm() / norm;
            counts[b] += 1;
        }
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(RadialSpectrum {
        bin_edges: (0..=bins).map(|j| j as f64 * width).collect(),
        values,
        counts,
        bin_width: width,
    })
}

fn windowed_sinc(cutoff: f64, taps: usize) -> Vec<f64> {
    let m = (taps / 2) as f64;
    let raw: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as f64 - m;
            let sinc = if n == 0.0 {
                cutoff / PI
            } else {
                (cutoff * n).sin() / (PI * n)
            };
            let hamming = 0.54 - 0.46 * (2.0 * PI * i as f64 / (taps - 1) as f64).cos();
            sinc * hamming
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Low-pass kernel for `s`-fold decimation: a 17-tap Hamming-windowed sinc
/// whose cut-off is tuned so the response is −3 dB at π/s.
pub fn antialias_kernel(s: usize) -> Result<FirKernel> {
    if s < 2 {
        return invalid(format!("decimation factor must be at least 2, got {s}"));
    }
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let edge = PI / s as f64;
    let response = |cutoff: f64| -> f64 {
        let taps = windowed_sinc(cutoff, ANTIALIAS_TAPS);
        FirKernel::new(taps, 0)
            .map(|k| k.response_at(edge))
            .unwrap_or(f64::NAN)
    };
    // The response at π/s rises monotonically with the cut-off on this range.
    let (mut lo, mut hi) = (0.5 * edge, (2.0 * edge).min(PI));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if response(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    FirKernel::new(windowed_sinc(0.5 * (lo + hi), ANTIALIAS_TAPS), 0)
}

/// Low-pass filters separably, then keeps every `s`-th sample on both axes.
pub fn antialias_downsample(image: &ImagePlane, s: usize) -> Result<ImagePlane> {
    let (w, h) = (image.width(), image.height());
    if s < 2 {
        return invalid(format!("decimation factor must be at least 2, got {s}"));
    }
    if 2 * s > w.min(h) {
        return invalid(format!(
            "decimation factor {s} exceeds half the smallest dimension of {w}x{h}"
        ));
    }
    let kernel = antialias_kernel(s)?;
    let filtered = convolve_unchecked(image, &kernel, &kernel);
    let (ow, oh) = (w.div_ceil(s), h.div_ceil(s));
    let mut samples = Vec::with_capacity(ow * oh);
    for y in (0..h).step_by(s) {
        let row = filtered.row(y);
        samples.extend(row.iter().step_by(s));
    }
    ImagePlane::with_depth(ow, oh, samples, image.bit_depth())
}

/// `R(r_j) = original_j / downsampled_j` on bins with a usable denominator.
///
/// Both spectra must have the same bin layout: bin `j` of the downsampled
/// spectrum is read at the same normalized radius as bin `j` of the original.
pub fn ratio_spectrum(
    original: &RadialSpectrum,
    downsampled: &RadialSpectrum,
    s: f64,
) -> Result<RatioSpectrum> {
    if !(s >= 1.0 && s.is_finite()) {
        return invalid(format!("scale factor must be at least 1, got {s}"));
    }
    if original.bins() != downsampled.bins() || original.bin_width != downsampled.bin_width {
        return invalid("spectra have different bin layouts");
    }
    let peak = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let num_floor = DENOMINATOR_FLOOR * peak(&original.values);
    let den_floor = DENOMINATOR_FLOOR * peak(&downsampled.values);
    let centers = original.centers();
    let mut out = RatioSpectrum {
        bins: Vec::new(),
        radii: Vec::new(),
        ratios: Vec::new(),
        scale_factor: s,
    };
    for (j, (&o, &d)) in original.values.iter().zip(&downsampled.values).enumerate() {
        if d > den_floor && o > num_floor && d > 0.0 && o > 0.0 {
            out.bins.push(j);
            out.radii.push(centers[j]);
            out.ratios.push(o / d);
        }
    }
    let valid = out.bins.iter().filter(|&&b| b != 0).count();
    if valid < MIN_VALID_BINS {
        return Err(DeblurError::InsufficientBand {
            valid,
            required: MIN_VALID_BINS,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize) -> ImagePlane {
        ImagePlane::from_fn(n, n, |x, y| if x == n / 2 && y == n / 2 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn impulse_is_flat() {
        let s = radial_spectrum(&impulse(64), 16).unwrap();
        let expected = 1.0 / (64.0 * 64.0);
        for v in &s.values {
            assert!((v - expected).abs() < 1e-15);
        }
        assert_eq!(s.bin_edges.len(), 17);
        assert!((s.bin_edges[16] - PI).abs() < 1e-15);
    }

    #[test]
    fn constant_lives_in_dc_bin() {
        let img = ImagePlane::filled(64, 48, 0.7).unwrap();
        let s = radial_spectrum(&img, 32).unwrap();
        assert!(s.values[0] > 0.0);
        assert!(s.values[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn argument_checks() {
        let small = ImagePlane::filled(31, 64, 0.0).unwrap();
        assert!(radial_spectrum(&small, 64).is_err());
        let ok = ImagePlane::filled(32, 32, 0.0).unwrap();
        assert!(radial_spectrum(&ok, 15).is_err());
        assert!(antialias_downsample(&ok, 1).is_err());
        assert!(antialias_downsample(&ok, 17).is_err());
        assert!(antialias_downsample(&ok, 16).is_ok());
    }

    #[test]
    fn antialias_kernel_meets_band_edges() {
        for s in [2, 3, 4] {
            let k = antialias_kernel(s).unwrap();
            assert_eq!(k.len(), ANTIALIAS_TAPS);
            assert!((k.sum() - 1.0).abs() < 1e-14);
            assert!((k.response_at(PI / s as f64) - 0.5f64.sqrt()).abs() < 1e-9);
        }
        let k2 = antialias_kernel(2).unwrap();
        assert!(k2.response_at(0.9 * PI).abs() < 0.1);
    }

    #[test]
    fn downsample_keeps_dc() {
        let img = ImagePlane::filled(40, 36, 0.25).unwrap();
        let d = antialias_downsample(&img, 2).unwrap();
        assert_eq!((d.width(), d.height()), (20, 18));
        assert!(d.samples().iter().all(|v| (v - 0.25).abs() < 1e-14));
    }

    #[test]
    fn self_ratio_is_one() {
        let img = ImagePlane::from_fn(64, 64, |x, y| ((x * x + 3 * y) % 11) as f64 / 10.0).unwrap();
        let s = radial_spectrum(&img, 32).unwrap();
        let r = ratio_spectrum(&s, &s, 1.0).unwrap();
        assert!(r.ratios.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ratio_needs_bins() {
        let img = ImagePlane::filled(64, 64, 0.5).unwrap();
        let s = radial_spectrum(&img, 32).unwrap();
        assert!(matches!(
            ratio_spectrum(&s, &s, 2.0),
            Err(DeblurError::InsufficientBand { valid: 0, .. })
        ));
    }
}
