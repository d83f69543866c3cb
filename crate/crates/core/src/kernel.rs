//! One-dimensional kernels: even-order derivative stencils, sampled
//! generalized-Gaussian blur kernels and their frequency responses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};

/// A symmetric, odd-length FIR kernel centered at `(len - 1) / 2`.
///
/// `derivative_order` is `0` for smoothing kernels (unit sum) and `2n` for
/// kernels that annihilate constants (zero sum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirKernel {
    taps: Vec<f64>,
    derivative_order: usize,
}

impl FirKernel {
    pub fn new(taps: Vec<f64>, derivative_order: usize) -> Result<Self> {
        if taps.is_empty() || taps.len() % 2 == 0 {
            return invalid(format!("kernel length must be odd, got {}", taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return invalid("kernel taps must be finite");
        }
        if derivative_order % 2 != 0 {
            return invalid("only even derivative orders are supported");
        }
        let scale = taps.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1.0);
        let len = taps.len();
        if (0..len / 2).any(|k| (taps[k] - taps[len - 1 - k]).abs() > 1e-12 * scale) {
            return invalid("kernel taps must be symmetric");
        }
        Ok(Self {
            taps,
            derivative_order,
        })
    }

    /// The one-tap identity kernel `[1]`.
    pub fn identity() -> Self {
        Self {
            taps: vec![1.0],
            derivative_order: 0,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn center(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn half_width(&self) -> usize {
        self.center()
    }

    pub fn derivative_order(&self) -> usize {
        self.derivative_order
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Σ taps[k]·(k − center)^power.
    pub fn moment(&self, power: u32) -> f64 {
        let c = self.center() as i64;
        self.taps
            .iter()
            .enumerate()
            .map(|(k, t)| t * ((k as i64 - c) as f64).powi(power as i32))
            .sum()
    }

    /// Zero-pads symmetrically to `len` taps.
    pub fn padded_to(&self, len: usize) -> Result<FirKernel> {
        if len < self.len() || len % 2 == 0 {
            return invalid(format!(
                "cannot pad a {}-tap kernel to {len} taps",
                self.len()
            ));
        }
        let pad = (len - self.len()) / 2;
        let mut taps = vec![0.0; len];
        taps[pad..pad + self.len()].copy_from_slice(&self.taps);
        Ok(FirKernel {
            taps,
            derivative_order: self.derivative_order,
        })
    }

    /// Real response Σ taps[k]·cos((k − center)·ω), with no range check.
    pub fn response_at(&self, omega: f64) -> f64 {
        let c = self.center();
        let mut acc = self.taps[c];
        for j in 1..=c {
            acc += (self.taps[c + j] + self.taps[c - j]) * (j as f64 * omega).cos();
        }
        acc
    }
}

/// Real frequency response of a symmetric kernel on `omegas ⊂ [0, π]`.
///
/// For a derivative kernel of order `2n` the ideal response is `(−1)^n ω^{2n}`.
pub fn frequency_response(kernel: &FirKernel, omegas: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = omegas.iter().find(|w| !(0.0..=PI).contains(*w)) {
        return invalid(format!("frequency {bad} outside [0, pi]"));
    }
    Ok(omegas.iter().map(|&w| kernel.response_at(w)).collect())
}

/// Centered maximally-flat finite-difference kernel for the `order`-th derivative.
///
/// The kernel reproduces the derivative exactly on polynomials of degree up to
/// `taps - 1`: every even moment other than the `order`-th vanishes, and the
/// `order`-th moment equals `order!`. Weights are evaluated in closed form
/// on the integer grid `−m..=m`.
pub fn derivative_kernel(order: usize, taps: usize) -> Result<FirKernel> {
    if order == 0 || order % 2 != 0 {
        return invalid(format!("derivative order must be even and >= 2, got {order}"));
    }
    if taps % 2 == 0 || taps < order + 1 {
        return invalid(format!(
            "tap length must be odd and >= {} for order {order}, got {taps}",
            order + 1
        ));
    }
    let m = (taps - 1) / 2;
    let mut weights = vec![0.0; taps];
    for k in 1..=m {
        let w = symmetric_weight(order / 2, m, k);
        weights[m + k] = w;
        weights[m - k] = w;
    }
    // pin the center so the taps sum to zero
    weights[m] = -2.0 * weights[m + 1..].iter().sum::<f64>();

    Ok(FirKernel {
        taps: weights,
        derivative_order: order,
    })
}

/// Weight at offset `±k` of the `2n`-th derivative stencil on `−m..=m`.
///
/// Pairing the Lagrange polynomials of `k` and `−k` gives
/// `(2n)!/2 · (−1)^{m−n} e_{m−n}({j² : j ≠ k}) / (k² Π_{j≠k}(k² − j²))`,
/// where `e_r` is the elementary symmetric polynomial and `j` runs over
/// `1..=m`. Every term of `e_r` is positive, so unlike a general-purpose
/// recurrence this loses nothing to cancellation. Squares are scaled by
/// `1/m²` to keep the intermediate products in range.
fn symmetric_weight(n: usize, m: usize, k: usize) -> f64 {
    let r = m - n;
    let mm = (m * m) as f64;
    let tk = (k * k) as f64 / mm;
    let mut e = vec![0.0; r + 1];
    e[0] = 1.0;
    let mut denom = tk;
    for j in (1..=m).filter(|&j| j != k) {
        let tj = (j * j) as f64 / mm;
        for i in (1..=r).rev() {
            e[i] += tj * e[i - 1];
        }
        denom *= tk - tj;
    }
    let factorial: f64 = (1..=2 * n).map(|i| i as f64).product();
    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
    sign * 0.5 * factorial * e[r] / denom / mm.powi(n as i32)
}

/// Generalized-Gaussian blur model: density ∝ exp(−|x / A(β, σ)|^β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedGaussianPsf {
    pub shape: f64,
    pub scale: f64,
    pub support_halfwidth: usize,
}

impl GeneralizedGaussianPsf {
    /// Default support: `ceil(6σ)` clamped to `[4, 64]` samples.
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        validate_shape_scale(shape, scale)?;
        let halfwidth = ((6.0 * scale).ceil() as usize).clamp(4, 64);
        Ok(Self {
            shape,
            scale,
            support_halfwidth: halfwidth,
        })
    }

    pub fn with_halfwidth(shape: f64, scale: f64, support_halfwidth: usize) -> Result<Self> {
        validate_shape_scale(shape, scale)?;
        if support_halfwidth == 0 {
            return invalid("support halfwidth must be positive");
        }
        Ok(Self {
            shape,
            scale,
            support_halfwidth,
        })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(2.0, scale)
    }

    pub fn laplacian(scale: f64) -> Result<Self> {
        Self::new(1.0, scale)
    }

    /// A(β, σ) = (σ² Γ(1/β) / Γ(3/β))^{1/2}.
    pub fn scaling_parameter(&self) -> f64 {
        let b = self.shape;
        (self.scale * self.scale * gamma(1.0 / b) / gamma(3.0 / b)).sqrt()
    }

    /// Continuous unit-mass density 1/(2Γ(1+1/β)A) · exp(−|x/A|^β).
    pub fn density(&self, x: f64) -> f64 {
        let a = self.scaling_parameter();
        (-(x / a).abs().powf(self.shape)).exp() / (2.0 * gamma(1.0 + 1.0 / self.shape) * a)
    }
}

fn validate_shape_scale(shape: f64, scale: f64) -> Result<()> {
    if !(shape > 0.0 && shape.is_finite()) {
        return invalid(format!("shape must be positive, got {shape}"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    Ok(())
}

/// Samples the generalized Gaussian on the integer grid and normalizes to unit sum.
pub fn sample_gg_kernel(psf: &GeneralizedGaussianPsf) -> Result<FirKernel> {
    validate_shape_scale(psf.shape, psf.scale)?;
    let a = psf.scaling_parameter();
    let hw = psf.support_halfwidth as i64;
    let mut taps: Vec<f64> = (-hw..=hw)
        .map(|k| (-(k as f64 / a).abs().powf(psf.shape)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Ok(FirKernel {
        taps,
        derivative_order: 0,
    })
}
