//! Generalization and training error.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::predict;
use crate::model::{Dataset, Estimate, GroundTruth};

/// Exact generalization error split by block.
///
/// `jy = fake + included + missing + noise_var` where `fake = ‖x̂_F‖²`,
/// `included = ‖x_S − x̂_S‖²`, `missing = ‖x_C‖²` and `noise_var = σ_v²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockErrors {
    pub fake: f64,
    pub included: f64,
    pub missing: f64,
    pub noise_var: f64,
    pub jy: f64,
}

/// Per-sample test error statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalError {
    /// `‖y_test − ŷ_test‖² / n_test`.
    pub mean: f64,
    /// Sample standard deviation of the squared residuals.
    pub sq_residual_std: f64,
    pub samples: usize,
}

impl EmpiricalError {
    pub fn standard_error(&self) -> f64 {
        self.sq_residual_std / (self.samples as f64).sqrt()
    }

    pub(crate) fn from_residual(residual: &DVector<f64>) -> Self {
        let samples = residual.len();
        let mean = residual.norm_squared() / samples as f64;
        let var = if samples > 1 {
            residual.iter().map(|r| (r * r - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
        } else {
            0.0
        };
        EmpiricalError { mean, sq_residual_std: var.sqrt(), samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub jy_analytic: f64,
    pub jy_empirical: Option<EmpiricalError>,
    /// Unnormalized `‖y − ŷ‖²` on the training set.
    pub training_error: f64,
    pub blocks: BlockErrors,
}

/// `J_y = ‖[0; x_S; x_C] − [x̂_F; x̂_S; 0]‖² + σ_v²`, blockwise.
pub fn gen_error_analytic(truth: &GroundTruth, est: &Estimate, sigma_v: f64) -> Result<BlockErrors> {
    if truth.x_included.len() != est.x_included.len() || truth.x_missing.len() != est.x_missing.len() {
        return Err(Error::Dimension(format!(
            "truth blocks ({}, {}) do not match estimate blocks ({}, {})",
            truth.x_included.len(),
            truth.x_missing.len(),
            est.x_included.len(),
            est.x_missing.len()
        )));
    }
    let fake = est.x_fake.norm_squared();
    let included = (&truth.x_included - &est.x_included).norm_squared();
    // x̂_C is identically zero.
    let missing = truth.x_missing.norm_squared();
    let noise_var = sigma_v * sigma_v;
    Ok(BlockErrors { fake, included, missing, noise_var, jy: fake + included + missing + noise_var })
}

/// Mean squared prediction residual over a test set.
pub fn gen_error_empirical(test: &Dataset, est: &Estimate) -> Result<EmpiricalError> {
    if test.rows() == 0 {
        return Err(Error::Dimension("test set is empty".into()));
    }
    let y_hat = predict(&test.a_fake, &test.a_included, est)?;
    Ok(EmpiricalError::from_residual(&(&test.response - y_hat)))
}

/// `‖y − ŷ‖²`.
pub fn training_error(y: &DVector<f64>, y_hat: &DVector<f64>) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::Dimension(format!(
            "response length {} differs from prediction length {}",
            y.len(),
            y_hat.len()
        )));
    }
    Ok((y - y_hat).norm_squared())
}
