//! Synthetic scenes and the blur-plus-noise forward model.
//!
//! Noise streams come from ChaCha8 seeded with `seed_from_u64`, so a given
//! seed reproduces the same samples on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rustfft::num_complex::Complex64;

use crate::blind::spectrum::{dft_frequency, transform2};
use crate::deblur::separable_convolve;
use crate::error::{invalid, Result};
use crate::image::{Image, ImagePlane};
use crate::kernel::{sample_gg_kernel, GeneralizedGaussianPsf};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("finite non-negative sigma")
}

fn normalized(samples: Vec<f64>, width: usize, height: usize) -> Result<ImagePlane> {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    ImagePlane::new(width, height, samples.into_iter().map(|v| (v - lo) / span).collect())
}

/// Random field with amplitude spectrum ∝ 1/|ω|^`exponent`, rescaled to
/// span `[0, 1]`. `exponent = 1` mimics the fall-off of natural images.
pub fn power_law_field(width: usize, height: usize, exponent: f64, seed: u64) -> Result<ImagePlane> {
    if width == 0 || height == 0 {
        return invalid("field dimensions must be positive");
    }
    let mut rng = rng(seed);
    let gauss = normal(1.0);
    let mut data = vec![Complex64::new(0.0, 0.0); width * height];
    for y in 0..height {
        let wy = dft_frequency(y, height);
        for x in 0..width {
            let wx = dft_frequency(x, width);
            let (re, im) = (gauss.sample(&mut rng), gauss.sample(&mut rng));
            let r = (wx * wx + wy * wy).sqrt();
            if r > 0.0 {
                data[y * width + x] = Complex64::new(re, im) / r.powf(exponent);
            }
        }
    }
    transform2(&mut data, width, height, true);
    normalized(data.iter().map(|c| c.re).collect(), width, height)
}

/// Flat discs of random gray levels on a gray background: piecewise
/// constant content with sharp edges.
pub fn disc_scene(width: usize, height: usize, discs: usize, seed: u64) -> Result<ImagePlane> {
    let mut rng = rng(seed);
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let mut samples = vec![0.2; width * height];
    let scale = width.min(height) as f64;
    for _ in 0..discs {
        let cx = unit.sample(&mut rng) * width as f64;
        let cy = unit.sample(&mut rng) * height as f64;
        let radius = scale * (0.02 + 0.12 * unit.sample(&mut rng));
        let level = unit.sample(&mut rng);
        for y in 0..height {
            let dy = y as f64 + 0.5 - cy;
            if dy.abs() > radius {
                continue;
            }
            for x in 0..width {
                let dx = x as f64 + 0.5 - cx;
                if dx * dx + dy * dy < radius * radius {
                    samples[y * width + x] = level;
                }
            }
        }
    }
    ImagePlane::new(width, height, samples)
}

/// A natural-looking test scene: a 1/f field with a few sharp discs laid
/// over it.
pub fn mixed_scene(width: usize, height: usize, seed: u64) -> Result<ImagePlane> {
    let field = power_law_field(width, height, 1.0, seed)?;
    let discs = disc_scene(width, height, 12, seed.wrapping_add(0x9e37_79b9))?;
    let samples = field
        .samples()
        .iter()
        .zip(discs.samples())
        .map(|(f, d)| 0.6 * f + 0.4 * d)
        .collect();
    ImagePlane::new(width, height, samples)
}

/// Seeded white Gaussian noise around `mean`.
pub fn white_noise(width: usize, height: usize, mean: f64, sigma: f64, seed: u64) -> Result<ImagePlane> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("noise sigma must be non-negative, got {sigma}"));
    }
    let mut rng = rng(seed);
    let dist = normal(sigma);
    ImagePlane::new(
        width,
        height,
        (0..width * height).map(|_| mean + dist.sample(&mut rng)).collect(),
    )
}

/// Zero everywhere except a unit sample at the center.
pub fn impulse(width: usize, height: usize) -> Result<ImagePlane> {
    ImagePlane::from_fn(width, height, |x, y| {
        if x == width / 2 && y == height / 2 {
            1.0
        } else {
            0.0
        }
    })
}

/// Vertical step: 0 for `x < edge`, 1 from `edge` on.
pub fn step_edge(width: usize, height: usize, edge: usize) -> Result<ImagePlane> {
    ImagePlane::from_fn(width, height, |x, _| if x < edge { 0.0 } else { 1.0 })
}

/// Separable generalized-Gaussian blur with mirror boundaries.
pub fn blur(image: &ImagePlane, psf: &GeneralizedGaussianPsf) -> Result<ImagePlane> {
    let k = sample_gg_kernel(psf)?;
    separable_convolve(image, &k, &k)
}

fn add_noise(image: &ImagePlane, sigma: f64, rng: &mut ChaCha8Rng) -> ImagePlane {
    if sigma == 0.0 {
        return image.clone();
    }
    let dist = normal(sigma);
    let samples = image.samples().iter().map(|v| v + dist.sample(rng)).collect();
    ImagePlane::with_depth(image.width(), image.height(), samples, image.bit_depth())
        .expect("same shape, finite samples")
}

fn check_noise(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("noise sigma must be non-negative, got {sigma}"));
    }
    Ok(())
}

/// Blurs with `psf`, adds seeded AWGN of standard deviation `noise_sigma`
/// and clips to `[0, 1]`.
pub fn simulate(
    image: &ImagePlane,
    psf: &GeneralizedGaussianPsf,
    noise_sigma: f64,
    seed: u64,
) -> Result<ImagePlane> {
    check_noise(noise_sigma)?;
    let blurred = blur(image, psf)?;
    Ok(add_noise(&blurred, noise_sigma, &mut rng(seed)).clipped())
}

/// [`simulate`] for every channel, drawing noise from one stream in channel
/// order.
pub fn simulate_image(
    image: &Image,
    psf: &GeneralizedGaussianPsf,
    noise_sigma: f64,
    seed: u64,
) -> Result<Image> {
    check_noise(noise_sigma)?;
    let mut rng = rng(seed);
    let channels = image
        .channels()
        .iter()
        .map(|c| Ok(add_noise(&blur(c, psf)?, noise_sigma, &mut rng).clipped()))
        .collect::<Result<Vec<_>>>()?;
    Image::new(channels, image.bit_depth())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let a = white_noise(16, 16, 0.5, 0.1, 7).unwrap();
        let b = white_noise(16, 16, 0.5, 0.1, 7).unwrap();
        let c = white_noise(16, 16, 0.5, 0.1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(power_law_field(32, 24, 1.0, 3).unwrap(), power_law_field(32, 24, 1.0, 3).unwrap());
    }

    #[test]
    fn fields_span_unit_range() {
        let f = power_law_field(64, 48, 1.0, 1).unwrap();
        let (lo, hi) = f
            .samples()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        assert_eq!((lo, hi), (0.0, 1.0));
        let m = mixed_scene(64, 64, 2).unwrap();
        assert!(m.samples().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn vanishing_blur_is_identity() {
        let img = disc_scene(32, 32, 5, 4).unwrap();
        let psf = GeneralizedGaussianPsf::new(2.0, 1e-6).unwrap();
        assert_eq!(simulate(&img, &psf, 0.0, 0).unwrap(), img);
    }

    #[test]
    fn rejects_negative_noise() {
        let img = ImagePlane::filled(16, 16, 0.5).unwrap();
        let psf = GeneralizedGaussianPsf::gaussian(1.0).unwrap();
        assert!(simulate(&img, &psf, -0.1, 0).is_err());
    }
}
