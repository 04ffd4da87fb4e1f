//! Problem configuration and the ground-truth / data / estimate types shared
//! by the rest of the crate.
//!
//! Block naming: *fake* features are in the model but not in the data,
//! *included* features are in both, *missing* features are in the data only.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions and scalar parameters of one simulated problem.
///
/// Deserializes from a structured config file with the keys
/// `n, p_fake, p_included, p_missing, sigma_v, power, r_s, lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Training sample count.
    pub n: usize,
    pub p_fake: usize,
    pub p_included: usize,
    pub p_missing: usize,
    /// Noise standard deviation.
    pub sigma_v: f64,
    /// Total signal power `‖x_S‖² + ‖x_C‖²`.
    pub power: f64,
    /// Fraction of the signal power carried by the included block.
    pub r_s: f64,
    /// Ridge parameter; zero selects the minimum-norm solution.
    pub lambda: f64,
}

impl ProblemConfig {
    /// Number of columns in the estimation model, `p_F + p_S`.
    pub fn p_bar(&self) -> usize {
        self.p_fake + self.p_included
    }

    /// Number of columns in the data-generating model, `p_S + p_C`.
    pub fn p_tilde(&self) -> usize {
        self.p_included + self.p_missing
    }

    pub fn p_total(&self) -> usize {
        self.p_fake + self.p_included + self.p_missing
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_p_fake(mut self, p_fake: usize) -> Self {
        self.p_fake = p_fake;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Dimension("n must be at least 1".into()));
        }
        if self.p_tilde() == 0 {
            return Err(Error::Dimension(
                "p_included + p_missing must be at least 1".into(),
            ));
        }
        for (field, value) in [
            ("sigma_v", self.sigma_v),
            ("power", self.power),
            ("lambda", self.lambda),
        ] {
            if !value.is_finite() {
                return Err(Error::Config(format!("`{field}` must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(Error::NegativeParameter { field, value });
            }
        }
        if !(0.0..=1.0).contains(&self.r_s) {
            return Err(Error::Power(format!("r_s must lie in [0, 1], got {}", self.r_s)));
        }
        if self.p_missing == 0 && self.r_s != 1.0 {
            return Err(Error::Power(format!(
                "r_s must be 1 when p_missing = 0, got {}",
                self.r_s
            )));
        }
        if self.p_included == 0 && self.r_s != 0.0 {
            return Err(Error::Power(format!(
                "r_s must be 0 when p_included = 0, got {}",
                self.r_s
            )));
        }
        Ok(())
    }
}

/// Returns `cfg` unchanged if every invariant holds.
pub fn validate_config(cfg: ProblemConfig) -> Result<ProblemConfig> {
    cfg.validate()?;
    Ok(cfg)
}

/// The unknown coefficient vectors of the data-generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x_included: DVector<f64>,
    pub x_missing: DVector<f64>,
}

impl GroundTruth {
    pub fn included_energy(&self) -> f64 {
        self.x_included.norm_squared()
    }

    pub fn missing_energy(&self) -> f64 {
        self.x_missing.norm_squared()
    }

    pub fn total_energy(&self) -> f64 {
        self.included_energy() + self.missing_energy()
    }
}

fn constant_block(len: usize, energy: f64) -> DVector<f64> {
    if len == 0 {
        return DVector::zeros(0);
    }
    DVector::from_element(len, (energy / len as f64).sqrt())
}

/// Builds the constant ground-truth vectors: every included entry is
/// `sqrt(r_s·P/p_S)` and every missing entry is `sqrt((1 − r_s)·P/p_C)`.
pub fn make_ground_truth(cfg: &ProblemConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    Ok(GroundTruth {
        x_included: constant_block(cfg.p_included, cfg.r_s * cfg.power),
        x_missing: constant_block(cfg.p_missing, (1.0 - cfg.r_s) * cfg.power),
    })
}

/// Feature blocks, noise and response for one training or test set.
///
/// Matrices are nalgebra `DMatrix` values and therefore column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a_fake: DMatrix<f64>,
    pub a_included: DMatrix<f64>,
    pub a_missing: DMatrix<f64>,
    pub noise: DVector<f64>,
    pub response: DVector<f64>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.response.len()
    }

    /// The model's feature matrix `[A_F, A_S]`.
    pub fn a_bar(&self) -> DMatrix<f64> {
        hstack(&self.a_fake, &self.a_included)
    }
}

pub(crate) fn hstack(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(left.nrows(), right.nrows());
    let rows = left.nrows();
    let mut out = DMatrix::zeros(rows, left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

/// A solved model extended to all three blocks; the missing block is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub x_fake: DVector<f64>,
    pub x_included: DVector<f64>,
    pub x_missing: DVector<f64>,
}

impl Estimate {
    pub fn zeros(p_fake: usize, p_included: usize, p_missing: usize) -> Self {
        Estimate {
            x_fake: DVector::zeros(p_fake),
            x_included: DVector::zeros(p_included),
            x_missing: DVector::zeros(p_missing),
        }
    }

    /// `[x̂_F; x̂_S]`, the part the model actually estimates.
    pub fn x_bar(&self) -> DVector<f64> {
        let p_fake = self.x_fake.len();
        let mut out = DVector::zeros(p_fake + self.x_included.len());
        out.rows_mut(0, p_fake).copy_from(&self.x_fake);
        out.rows_mut(p_fake, self.x_included.len())
            .copy_from(&self.x_included);
        out
    }
}
