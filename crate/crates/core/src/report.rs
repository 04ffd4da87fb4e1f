//! CSV and JSON serialization of sweep results, bound tables and run metadata.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bound::{BoundParams, BoundReport};
use crate::error::{Error, Result};
use crate::experiment::{CellSummary, ExperimentPlan, SweepResult};
use crate::model::ProblemConfig;

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "p_fake",
    "lambda",
    "jy_analytic_mean",
    "jy_analytic_std",
    "jy_empirical_mean",
    "train_err_mean",
    "bound_value",
    "prob_floor",
    "coverage",
    "trials",
];

/// One line of `sweep.csv`. Optional columns are written empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub p_fake: usize,
    pub lambda: f64,
    pub jy_analytic_mean: f64,
    pub jy_analytic_std: f64,
    pub jy_empirical_mean: Option<f64>,
    pub train_err_mean: f64,
    pub bound_value: Option<f64>,
    pub prob_floor: Option<f64>,
    pub coverage: Option<f64>,
    pub trials: usize,
}

impl From<&CellSummary> for SweepCsvRow {
    fn from(c: &CellSummary) -> Self {
        SweepCsvRow {
            p_fake: c.p_fake,
            lambda: c.lambda,
            jy_analytic_mean: c.jy_analytic_mean,
            jy_analytic_std: c.jy_analytic_std,
            jy_empirical_mean: c.jy_empirical_mean,
            train_err_mean: c.train_err_mean,
            bound_value: c.bound.map(|b| b.bound_value),
            prob_floor: c.bound.map(|b| b.prob_floor),
            coverage: c.coverage,
            trials: c.trials,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &result.rows {
        w.serialize(SweepCsvRow::from(row)).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))
}

/// Parses a sweep CSV, rejecting any header other than [`SWEEP_CSV_HEADER`].
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepCsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(SWEEP_CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected CSV header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            SWEEP_CSV_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// JSON sidecar written next to `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub plan: ExperimentPlan,
    /// How `jy_empirical_mean` is normalized.
    pub empirical_normalization: String,
    pub columns: Vec<String>,
}

impl RunMetadata {
    pub fn new(plan: &ExperimentPlan) -> Self {
        RunMetadata {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: plan.settings.master_seed,
            plan: plan.clone(),
            empirical_normalization: format!(
                "per-sample mean ||y_test - y_hat_test||^2 / n_test; multiply by n_test = {} for the summed convention",
                plan.settings.n_test
            ),
            columns: SWEEP_CSV_HEADER.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn write_metadata_json<W: Write>(plan: &ExperimentPlan, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &RunMetadata::new(plan)).map_err(|e| Error::Config(format!("json: {e}")))
}

/// A [`BoundReport`] flattened together with the cell it was evaluated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub p_fake: usize,
    pub p_included: usize,
    pub p_missing: usize,
    pub lambda: f64,
    pub t1: f64,
    pub t2: f64,
    pub r_min: usize,
    pub r_max: usize,
    pub f_g: f64,
    pub f_g_bar: f64,
    pub included_term: f64,
    pub noise_term: f64,
    pub omega_z2: f64,
    pub bound_value: f64,
    pub prob_floor: f64,
    pub vacuous: bool,
}

impl BoundRow {
    pub fn new(cfg: &ProblemConfig, params: &BoundParams, r: &BoundReport) -> Self {
        BoundRow {
            n: cfg.n,
            p_fake: cfg.p_fake,
            p_included: cfg.p_included,
            p_missing: cfg.p_missing,
            lambda: cfg.lambda,
            t1: params.t1,
            t2: params.t2,
            r_min: r.r_min,
            r_max: r.r_max,
            f_g: r.f_g,
            f_g_bar: r.f_g_bar,
            included_term: r.included_term,
            noise_term: r.noise_term,
            omega_z2: r.omega_z2,
            bound_value: r.bound_value,
            prob_floor: r.prob_floor,
            vacuous: r.vacuous,
        }
    }
}

pub fn write_bound_csv<W: Write>(rows: &[BoundRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))
}
