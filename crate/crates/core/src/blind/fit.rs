use serde::{Deserialize, Serialize};

use super::model::BlurModel;
use super::spectrum::{RatioSpectrum, MIN_VALID_BINS};
use crate::error::{invalid, DeblurError, Result};

/// Multi-start grid for α, log-spaced over this range.
pub const ALPHA_START_RANGE: (f64, f64) = (0.25, 8.0);
pub const ALPHA_STARTS: usize = 16;
pub const MAX_ITERATIONS: usize = 300;

const ALPHA_FLOOR: f64 = 1e-3;
const ALPHA_CEILING: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurEstimate {
    pub model: BlurModel,
    pub alpha: f64,
    pub noise_coeff: f64,
    /// Root-mean-square misfit of R(r) over the fitted bins.
    pub fit_residual: f64,
    pub scale_factor: f64,
}

pub fn fit_gaussian_model(ratio: &RatioSpectrum) -> Result<BlurEstimate> {
    fit_model(ratio, BlurModel::Gaussian)
}

pub fn fit_laplacian_model(ratio: &RatioSpectrum) -> Result<BlurEstimate> {
    fit_model(ratio, BlurModel::Laplacian)
}

/// Least-squares fit of (α, c′) to the ratio spectrum, skipping the DC bin.
///
/// Each of the log-spaced starting scales is refined by a damped
/// Gauss–Newton (Levenberg–Marquardt) iteration with a finite-difference
/// Jacobian; c′ is projected onto c′ ≥ 0 after every step. The best
/// converged iterate wins.
pub fn fit_model(ratio: &RatioSpectrum, model: BlurModel) -> Result<BlurEstimate> {
    let s = ratio.scale_factor;
    if !(s >= 1.0 && s.is_finite()) {
        return invalid(format!("scale factor must be at least 1, got {s}"));
    }
    let (r, data) = ratio.fit_points();
    if r.len() < MIN_VALID_BINS {
        return Err(DeblurError::InsufficientBand {
            valid: r.len(),
            required: MIN_VALID_BINS,
        });
    }
    let problem = Problem {
        model,
        s,
        r: &r,
        data: &data,
    };
    let (lo, hi) = ALPHA_START_RANGE;
    let mut best: Option<Outcome> = None;
    for i in 0..ALPHA_STARTS {
        let t = i as f64 / (ALPHA_STARTS - 1) as f64;
        let alpha0 = lo * (hi / lo).powf(t);
        let outcome = problem.refine([alpha0, 0.0]);
        let better = match &best {
            None => true,
            Some(b) => {
                (outcome.converged && !b.converged)
                    || (outcome.converged == b.converged && outcome.cost < b.cost)
            }
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    let residual = (best.cost / r.len() as f64).sqrt();
    if !best.converged || !residual.is_finite() {
        return Err(DeblurError::FitFailed {
            alpha: best.params[0],
            noise_coeff: best.params[1],
            residual,
        });
    }
    Ok(BlurEstimate {
        model,
        alpha: best.params[0],
        noise_coeff: best.params[1],
        fit_residual: residual,
        scale_factor: s,
    })
}

struct Problem<'a> {
    model: BlurModel,
    s: f64,
    r: &'a [f64],
    data: &'a [f64],
}

struct Outcome {
    params: [f64; 2],
    cost: f64,
    converged: bool,
}

fn project(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(ALPHA_FLOOR, ALPHA_CEILING), p[1].max(0.0)]
}

impl Problem<'_> {
    fn residuals(&self, p: [f64; 2]) -> Vec<f64> {
        self.r
            .iter()
            .zip(self.data)
            .map(|(&r, &d)| self.model.ratio(r, self.s, p[0], p[1]) - d)
            .collect()
    }

    fn cost(&self, p: [f64; 2]) -> f64 {
        let c: f64 = self.residuals(p).iter().map(|v| v * v).sum();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    }

    /// Central-difference Jacobian columns for α and c′.
    fn jacobian(&self, p: [f64; 2]) -> [Vec<f64>; 2] {
        let mut cols: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (k, col) in cols.iter_mut().enumerate() {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let (mut plus, mut minus) = (p, p);
            plus[k] += h;
            minus[k] -= h;
            let (fp, fm) = (self.residuals(plus), self.residuals(minus));
            *col = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        }
        cols
    }

    fn refine(&self, start: [f64; 2]) -> Outcome {
        let mut p = project(start);
        let mut cost = self.cost(p);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            let f = self.residuals(p);
            let [ja, jc] = self.jacobian(p);
            let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            let (aa, ac, cc) = (dot(&ja, &ja), dot(&ja, &jc), dot(&jc, &jc));
            let (ga, gc) = (dot(&ja, &f), dot(&jc, &f));
            let mut accepted = false;
            while lambda < 1e12 {
                let (m11, m22) = (aa * (1.0 + lambda) + 1e-300, cc * (1.0 + lambda) + 1e-300);
                let det = m11 * m22 - ac * ac;
                if !(det.abs() > 0.0) || !det.is_finite() {
                    lambda *= 10.0;
                    continue;
                }
                let da = -(m22 * ga - ac * gc) / det;
                let dc = -(m11 * gc - ac * ga) / det;
                let trial = project([p[0] + da, p[1] + dc]);
                let trial_cost = self.cost(trial);
                if trial_cost <= cost {
                    let step = (trial[0] - p[0]).abs() / p[0] + (trial[1] - p[1]).abs();
                    let drop = cost - trial_cost;
                    p = trial;
                    cost = trial_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if step < 1e-12 || drop <= 1e-15 * cost.max(1e-300) {
                        return Outcome {
                            params: p,
                            cost,
                            converged: true,
                        };
                    }
                    break;
                }
                lambda *= 4.0;
            }
            if !accepted {
                // No descent direction left: p is a (projected) stationary point.
                return Outcome {
                    params: p,
                    cost,
                    converged: cost.is_finite(),
                };
            }
        }
        Outcome {
            params: p,
            cost,
            converged: false,
        }
    }
}
