//! TOML plan and config files.
//!
//! A plan file carries the problem keys (`n`, `p_included`, `p_missing`,
//! `sigma_v`, `power`, `r_s`) plus the sweep keys:
//!
//! ```toml
//! lambda_grid = { from = 1e-3, to = 1e3, points = 12 }   # or an explicit list
//! p_f_list = [0, 100, 300, 500]
//! m_features = 100
//! m_noise = 100
//! n_test = 20000
//! t1 = 4.605170185988092
//! t2 = 3.255247261437459
//! ```
//!
//! The master seed is never read from a file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bound::BoundParams;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentPlan, MonteCarloSettings};
use crate::model::ProblemConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    Values(Vec<f64>),
    /// `points` values evenly spaced in log10 between `from` and `to` inclusive.
    LogSpaced { from: f64, to: f64, points: usize },
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            LambdaGrid::Values(ref v) => Ok(v.clone()),
            LambdaGrid::LogSpaced { from, to, points } => log_spaced(from, to, points),
        }
    }
}

pub fn log_spaced(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Config("`lambda_grid.points` must be at least 1".into()));
    }
    if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) {
        return Err(Error::Config("`lambda_grid` log-spaced bounds must be positive and finite".into()));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    if to <= from {
        return Err(Error::Config("`lambda_grid.to` must exceed `lambda_grid.from`".into()));
    }
    let (a, b) = (from.log10(), to.log10());
    let step = (b - a) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| match k {
            0 => from,
            k if k == points - 1 => to,
            k => 10f64.powf(a + step * k as f64),
        })
        .collect())
}

fn default_m() -> usize {
    100
}

fn default_n_test() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub n: usize,
    pub p_included: usize,
    pub p_missing: usize,
    pub sigma_v: f64,
    pub power: f64,
    pub r_s: f64,
    pub lambda_grid: LambdaGrid,
    pub p_f_list: Vec<usize>,
    #[serde(default = "default_m")]
    pub m_features: usize,
    #[serde(default = "default_m")]
    pub m_noise: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
}

impl PlanFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("plan file: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn bound_params(&self) -> Result<Option<BoundParams>> {
        match (self.t1, self.t2) {
            (Some(t1), Some(t2)) => Ok(Some(BoundParams::new(t1, t2)?)),
            (None, None) => Ok(None),
            _ => Err(Error::Config("`t1` and `t2` must be given together".into())),
        }
    }

    /// Builds and validates the experiment plan for `master_seed`.
    pub fn into_plan(self, master_seed: u64) -> Result<ExperimentPlan> {
        let lambda_grid = self.lambda_grid.values()?;
        let base = ProblemConfig {
            n: self.n,
            p_fake: self.p_f_list.first().copied().unwrap_or(0),
            p_included: self.p_included,
            p_missing: self.p_missing,
            sigma_v: self.sigma_v,
            power: self.power,
            r_s: self.r_s,
            lambda: lambda_grid.first().copied().unwrap_or(0.0),
        };
        let plan = ExperimentPlan {
            base,
            settings: MonteCarloSettings {
                m_features: self.m_features,
                m_noise: self.m_noise,
                n_test: self.n_test,
                master_seed,
                bound_params: self.bound_params()?,
            },
            lambda_grid,
            p_f_list: self.p_f_list,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Loads a single [`ProblemConfig`] file.
pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ProblemConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("config file: {}", e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}
