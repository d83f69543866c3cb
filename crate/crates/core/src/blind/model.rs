//! Forward models of the ratio spectrum for Gaussian and Laplacian blur.
//!
//! Under a 1/r natural-image prior, the radial spectrum of a blurred image
//! at radius r is proportional to (1/r)·ĥ(r) plus a flat noise floor. The
//! ratio between the original and an s-fold downsample, after multiplying
//! both by r, is
//!
//! ```text
//! R(r) = (H(r, 1) + c'·r) / (H(r, s) + c'·r)
//! ```
//!
//! where H(r, s) = s·h̄(r/s) and h̄ is the angular mean of the 2D blur
//! response on the ring of radius r/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlurModel {
    Gaussian,
    Laplacian,
}

impl BlurModel {
    /// Generalized-Gaussian shape β of the model.
    pub fn shape(self) -> f64 {
        match self {
            BlurModel::Gaussian => 2.0,
            BlurModel::Laplacian => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BlurModel::Gaussian => "gaussian",
            BlurModel::Laplacian => "laplacian",
        }
    }

    /// Model ratio R(r) for blur scale `alpha`, noise coefficient `c`.
    pub fn ratio(self, r: f64, s: f64, alpha: f64, c: f64) -> f64 {
        let (num, den) = match self {
            BlurModel::Gaussian => (gaussian_ring(r, alpha), s * gaussian_ring(r / s, alpha)),
            BlurModel::Laplacian => (laplacian_ring(r, alpha), s * laplacian_ring(r / s, alpha)),
        };
        (num + c * r) / (den + c * r)
    }
}

impl std::str::FromStr for BlurModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(BlurModel::Gaussian),
            "laplacian" => Ok(BlurModel::Laplacian),
            other => Err(format!("unknown blur model '{other}' (expected gaussian or laplacian)")),
        }
    }
}

/// Gaussian blur response exp(−α²ρ²/2); rotation invariant.
fn gaussian_ring(rho: f64, alpha: f64) -> f64 {
    (-0.5 * alpha * alpha * rho * rho).exp()
}

/// Angular mean over a ring of radius ρ of the separable Laplacian response
/// 1/((1 + qx)(1 + qy)) with q = α²ω²/2:
///
/// (1/2π)∫ 4/(P + Q·sin²2θ) dθ = 4/√(P(P+Q)), P = 4 + 2α²ρ², Q = α⁴ρ⁴/4.
fn laplacian_ring(rho: f64, alpha: f64) -> f64 {
    let q = alpha * alpha * rho * rho;
    let p = 4.0 + 2.0 * q;
    let big_q = 0.25 * q * q;
    4.0 / (p * (p + big_q)).sqrt()
}

/// Closed form used for the circular integral of the Laplacian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LaplacianForm {
    /// 2πA/√(B² + B), which matches direct quadrature of the integral.
    #[default]
    Corrected,
    /// 2πA/√(B² + 1), a variant that circulates for this integral. It does
    /// not agree with quadrature and is kept only for comparison.
    Uncorrected,
}

fn check_radial_args(r: f64, s: f64, alpha: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("radius must be non-negative and finite, got {r}"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("alpha must be positive and finite, got {alpha}"));
    }
    if !(s >= 1.0 && s.is_finite()) {
        return invalid(format!("scale factor must be at least 1, got {s}"));
    }
    Ok(())
}

/// The constants of the circular integral: A = 16s⁵/(α⁴r⁵) and
/// B = (16s⁴ + 8α²r²s²)/(α⁴r⁴).
pub fn laplacian_constants(r: f64, s: f64, alpha: f64) -> (f64, f64) {
    let a4 = alpha.powi(4);
    let a = 16.0 * s.powi(5) / (a4 * r.powi(5));
    let b = (16.0 * s.powi(4) + 8.0 * alpha * alpha * r * r * s * s) / (a4 * r.powi(4));
    (a, b)
}

/// ∫₀^{2π} (s/r)·4 / (4 + 2q + q²cos²θ sin²θ) dθ with q = α²(r/s)²,
/// i.e. the circular integral of the Laplacian spectrum at radius r/s under
/// the 1/r prior, evaluated in closed form as 2πA/√(B² + B).
///
/// At r = 0 the integral diverges like 2πs/r and `+∞` is returned; see
/// [`laplacian_ring_integral`] for the finite, unweighted ring integral.
pub fn laplacian_radial_model(r: f64, s: f64, alpha: f64) -> Result<f64> {
    laplacian_radial_model_with(r, s, alpha, LaplacianForm::Corrected)
}

pub fn laplacian_radial_model_with(r: f64, s: f64, alpha: f64, form: LaplacianForm) -> Result<f64> {
    check_radial_args(r, s, alpha)?;
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    // Written as (A/B)/√(1 + x/B²) with A/B and 1/B expanded so nothing
    // overflows at small r, where A and B grow like r⁻⁵ and r⁻⁴.
    let (a2r2, s2) = (alpha * alpha * r * r, s * s);
    let a_over_b = (s / r) * 2.0 * s2 / (2.0 * s2 + a2r2);
    let inv_b = a2r2 * a2r2 / (16.0 * s2 * s2 + 8.0 * a2r2 * s2);
    let correction = match form {
        LaplacianForm::Corrected => inv_b,
        LaplacianForm::Uncorrected => inv_b * inv_b,
    };
    let value = 2.0 * PI * a_over_b / (1.0 + correction).sqrt();
    Ok(value)
}

/// ∫₀^{2π} 4 / (4 + 2q + q²cos²θ sin²θ) dθ with q = α²(r/s)²; equals 2π at
/// r = 0 and decays as the ring leaves the pass band.
pub fn laplacian_ring_integral(r: f64, s: f64, alpha: f64) -> Result<f64> {
    check_radial_args(r, s, alpha)?;
    Ok(2.0 * PI * laplacian_ring(r / s, alpha))
}
