//! High-probability bound on the ridge generalization error, plus the
//! intermediate events used to derive it, exposed as runtime diagnostics.
//!
//! With `r_min = min(n, p̄)`, `r_max = max(n, p̄)` and `(·)₊ = max(·, 0)`
//! applied before squaring:
//!
//! ```text
//! f_g  = (√n + √p̄ + t₂)² / ((√r_max − √r_min − t₂)₊² + λ)²
//! f̄_g  = λ² / ((√n − √p̄ − t₂)₊² + λ)²     if n ≥ p̄,   1 otherwise
//! J_y  < ‖x_S‖²·f̄_g + ω²·f_g·(r_min + 2√(r_min·t₁) + 2t₁) + ω²
//! ```
//!
//! holds with probability at least `1 − e^{−t₁} − 2e^{−t₂²/2}`, where
//! `ω² = ‖x_C‖² + σ_v²` is the variance of the effective noise.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundTruth, ProblemConfig};

/// Confidence parameters `t₁, t₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub t1: f64,
    pub t2: f64,
}

impl BoundParams {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        for (field, value) in [("t1", t1), ("t2", t2)] {
            if value.is_nan() || value < 0.0 {
                return Err(Error::NegativeParameter { field, value });
            }
        }
        Ok(BoundParams { t1, t2 })
    }

    /// `t₁ = ln 100`, `t₂ = √(2 ln 200)`: each failure term is 0.01, floor 0.98.
    pub fn floor_098() -> Self {
        BoundParams { t1: 100f64.ln(), t2: (2.0 * 200f64.ln()).sqrt() }
    }

    pub fn prob_floor(&self) -> f64 {
        prob_floor(self.t1, self.t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub f_g: f64,
    pub f_g_bar: f64,
    /// `‖x_S‖²·f̄_g`.
    pub included_term: f64,
    /// `ω²·f_g·(r_min + 2√(r_min·t₁) + 2t₁)`.
    pub noise_term: f64,
    /// `ω² = ‖x_C‖² + σ_v²`.
    pub omega_z2: f64,
    pub bound_value: f64,
    pub prob_floor: f64,
    /// The floor is not positive, so the bound asserts nothing.
    pub vacuous: bool,
    pub r_min: usize,
    pub r_max: usize,
}

fn positive_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::LambdaZero(lambda))
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

pub fn f_g(n: usize, p_bar: usize, lambda: f64, t2: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    let (r_min, r_max) = (n.min(p_bar) as f64, n.max(p_bar) as f64);
    let num = ((n as f64).sqrt() + (p_bar as f64).sqrt() + t2).powi(2);
    let gap = pos(r_max.sqrt() - r_min.sqrt() - t2);
    Ok(num / (gap * gap + lambda).powi(2))
}

pub fn f_g_bar(n: usize, p_bar: usize, lambda: f64, t2: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    if n < p_bar {
        return Ok(1.0);
    }
    let gap = pos((n as f64).sqrt() - (p_bar as f64).sqrt() - t2);
    Ok(lambda * lambda / (gap * gap + lambda).powi(2))
}

/// `1 − e^{−t₁} − 2e^{−t₂²/2}`; may be negative.
pub fn prob_floor(t1: f64, t2: f64) -> f64 {
    1.0 - (-t1).exp() - 2.0 * (-t2 * t2 / 2.0).exp()
}

/// Variance of the effective noise `A_C·x_C + v`.
pub fn omega_z2(truth: &GroundTruth, cfg: &ProblemConfig) -> f64 {
    truth.missing_energy() + cfg.sigma_v * cfg.sigma_v
}

pub fn theorem_bound(truth: &GroundTruth, cfg: &ProblemConfig, params: &BoundParams) -> Result<BoundReport> {
    positive_lambda(cfg.lambda)?;
    let params = BoundParams::new(params.t1, params.t2)?;
    let (n, p_bar) = (cfg.n, cfg.p_bar());
    let (r_min, r_max) = (n.min(p_bar), n.max(p_bar));
    let f_g = f_g(n, p_bar, cfg.lambda, params.t2)?;
    let f_g_bar = f_g_bar(n, p_bar, cfg.lambda, params.t2)?;
    let omega = omega_z2(truth, cfg);
    let rm = r_min as f64;
    let included_term = truth.included_energy() * f_g_bar;
    let noise_term = omega * f_g * (rm + 2.0 * (rm * params.t1).sqrt() + 2.0 * params.t1);
    let prob_floor = params.prob_floor();
    Ok(BoundReport {
        f_g,
        f_g_bar,
        included_term,
        noise_term,
        omega_z2: omega,
        bound_value: included_term + noise_term + omega,
        prob_floor,
        vacuous: prob_floor <= 0.0,
        r_min,
        r_max,
    })
}

/// `g_i = s_i² / (s_i² + λ)²`.
pub fn g_coefficients(singular_values: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    positive_lambda(lambda)?;
    Ok(singular_values.map(|s| {
        let s2 = s * s;
        s2 / (s2 + lambda).powi(2)
    }))
}

/// Whether `Σ g_i z_i² < ω²·(Σ g_i + 2‖g‖√t₁ + 2‖g‖_∞·t₁)`.
pub fn chi2_event_check(g: &DVector<f64>, z: &DVector<f64>, omega_z2: f64, t1: f64) -> Result<bool> {
    if g.len() != z.len() {
        return Err(Error::Dimension(format!(
            "g has length {} but z has length {}",
            g.len(),
            z.len()
        )));
    }
    let weighted: f64 = g.iter().zip(z.iter()).map(|(g, z)| g * z * z).sum();
    let g_inf = g.iter().fold(0.0f64, |m, &x| m.max(x));
    let threshold = omega_z2 * (g.sum() + 2.0 * g.norm() * t1.sqrt() + 2.0 * g_inf * t1);
    Ok(weighted < threshold)
}

/// Whether `√r_max − √r_min − t₂ ≤ s_min` and `s_max ≤ √n + √p̄ + t₂`.
pub fn singular_event_check(s_min: f64, s_max: f64, n: usize, p_bar: usize, t2: f64) -> bool {
    let (r_min, r_max) = (n.min(p_bar) as f64, n.max(p_bar) as f64);
    r_max.sqrt() - r_min.sqrt() - t2 <= s_min && s_max <= (n as f64).sqrt() + (p_bar as f64).sqrt() + t2
}
