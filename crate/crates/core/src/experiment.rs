//! Monte Carlo orchestration.
//!
//! For every fake-feature count `p_F` the experiment draws `m_features`
//! realizations of the training and test feature matrices. Each realization
//! is paired with `m_noise` independent training/test noise vectors, and every
//! λ in the grid is evaluated on the same data. Cell statistics are an inner
//! mean over noise draws followed by an outer mean over realizations.
//!
//! Random streams are keyed by `(p_F, realization, noise draw, split, block)`
//! so results do not depend on plan ordering or on how many worker threads
//! run the trials. Reductions always happen sequentially in trial order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{chi2_event_check, g_coefficients, singular_event_check, theorem_bound, BoundParams, BoundReport};
use crate::datagen::{gen_dataset, gen_features, gen_noise, Block, SeedSpec, Split, StreamId};
use crate::error::{Error, Result};
use crate::estimator::{compact_gram, extend_estimate, left_singular, PseudoInverse, RidgeFactor};
use crate::metrics::{gen_error_analytic, BlockErrors, EmpiricalError, ErrorReport};
use crate::model::{hstack, make_ground_truth, GroundTruth, ProblemConfig};

/// Stream cell key used by [`coverage_estimate`].
const COVERAGE_CELL: u64 = 0x636f_7665_7261_6765;
/// Stream cell key used by [`interpolation_check`].
const INTERPOLATION_CELL: u64 = 0x696e_7465_7270_6f6c;

/// Trial counts and seeding shared by every cell of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSettings {
    /// Number of feature-matrix realizations.
    pub m_features: usize,
    /// Noise vectors per realization.
    pub m_noise: usize,
    pub n_test: usize,
    pub master_seed: u64,
    pub bound_params: Option<BoundParams>,
}

impl MonteCarloSettings {
    /// 100 × 100 trials and 20000 test samples.
    pub fn full_scale(master_seed: u64) -> Self {
        MonteCarloSettings { m_features: 100, m_noise: 100, n_test: 20_000, master_seed, bound_params: None }
    }

    pub fn trials(&self) -> usize {
        self.m_features * self.m_noise
    }

    fn validate(&self) -> Result<()> {
        for (field, value) in [("m_features", self.m_features), ("m_noise", self.m_noise), ("n_test", self.n_test)] {
            if value == 0 {
                return Err(Error::Config(format!("`{field}` must be at least 1")));
            }
        }
        if let Some(p) = self.bound_params {
            BoundParams::new(p.t1, p.t2)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Shared configuration; its `p_fake` and `lambda` are replaced per cell.
    pub base: ProblemConfig,
    pub lambda_grid: Vec<f64>,
    pub p_f_list: Vec<usize>,
    #[serde(flatten)]
    pub settings: MonteCarloSettings,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::Config("`lambda_grid` must not be empty".into()));
        }
        if self.p_f_list.is_empty() {
            return Err(Error::Config("`p_f_list` must not be empty".into()));
        }
        if let Some(bad) = self.lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::Config(format!("`lambda_grid` entries must be finite and non-negative, got {bad}")));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`lambda_grid` must be strictly ascending".into()));
        }
        let mut sorted = self.p_f_list.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("`p_f_list` must not contain duplicates".into()));
        }
        self.settings.validate()?;
        for &p_fake in &self.p_f_list {
            for &lambda in &self.lambda_grid {
                self.base.with_p_fake(p_fake).with_lambda(lambda).validate()?;
            }
        }
        Ok(())
    }
}

/// Per-trial diagnostics from the singular values of `Ā`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialDiagnostics {
    pub s_min: f64,
    pub s_max: f64,
    /// Singular-value concentration event (needs bound parameters).
    pub singular_event: Option<bool>,
    /// Weighted chi-squared event (needs bound parameters and λ > 0).
    pub chi2_event: Option<bool>,
    /// Whether `J_y` fell below the bound (needs bound parameters and λ > 0).
    pub below_bound: Option<bool>,
}

/// Aggregated statistics of one `(p_F, λ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub p_fake: usize,
    pub lambda: f64,
    /// Outer mean over realizations of the inner mean over noise draws.
    pub jy_analytic_mean: f64,
    /// Plain mean over all trials; equals the nested mean up to rounding.
    pub jy_analytic_flat_mean: f64,
    /// Sample standard deviation of the per-realization means.
    pub jy_analytic_std: f64,
    pub jy_empirical_mean: Option<f64>,
    /// Standard error of the mean difference between empirical and analytic error.
    pub jy_gap_std_error: Option<f64>,
    pub train_err_mean: f64,
    pub bound: Option<BoundReport>,
    pub coverage: Option<f64>,
    pub chi2_event_rate: Option<f64>,
    pub singular_event_rate: Option<f64>,
    pub trials: usize,
}

impl CellSummary {
    /// Standard error of `jy_analytic_mean` across realizations.
    pub fn jy_analytic_std_error(&self, m_features: usize) -> f64 {
        self.jy_analytic_std / (m_features as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<CellSummary>,
}

impl SweepResult {
    pub fn row(&self, p_fake: usize, lambda: f64) -> Option<&CellSummary> {
        self.rows.iter().find(|r| r.p_fake == p_fake && r.lambda == lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialOutcome {
    blocks: BlockErrors,
    empirical: Option<EmpiricalError>,
    training_error: f64,
    diagnostics: TrialDiagnostics,
}

impl TrialOutcome {
    fn report(&self) -> ErrorReport {
        ErrorReport {
            jy_analytic: self.blocks.jy,
            jy_empirical: self.empirical,
            training_error: self.training_error,
            blocks: self.blocks,
        }
    }
}

enum Solver {
    Empty,
    MinNorm(PseudoInverse),
    Ridge(RidgeFactor),
}

impl Solver {
    fn solve(&self, a_bar: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Solver::Empty => Ok(DVector::zeros(0)),
            Solver::MinNorm(pinv) => pinv.apply(y),
            Solver::Ridge(ridge) => ridge.solve(a_bar, y),
        }
    }
}

struct TestFeatures {
    a_bar: DMatrix<f64>,
    /// `A_S,test·x_S + A_C,test·x_C`.
    signal: DVector<f64>,
}

/// One draw of the training (and optionally test) feature matrices.
struct Realization<'a> {
    cfg: &'a ProblemConfig,
    truth: &'a GroundTruth,
    a_bar: DMatrix<f64>,
    /// `A_S·x_S + A_C·x_C` on the training rows.
    signal: DVector<f64>,
    /// `A_C·x_C`, the structured part of the effective noise.
    missing_signal: DVector<f64>,
    test: Option<TestFeatures>,
    gram: Option<DMatrix<f64>>,
    spectrum: Option<(DMatrix<f64>, DVector<f64>)>,
}

fn draw_blocks(rows: usize, cfg: &ProblemConfig, seed: &SeedSpec) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    (
        gen_features(rows, cfg.p_fake, &seed.with_block(Block::Fake)),
        gen_features(rows, cfg.p_included, &seed.with_block(Block::Included)),
        gen_features(rows, cfg.p_missing, &seed.with_block(Block::Missing)),
    )
}

fn with_split(seed: &SeedSpec, split: Split) -> SeedSpec {
    SeedSpec { stream: StreamId { split, ..seed.stream }, ..*seed }
}

impl<'a> Realization<'a> {
    fn draw(
        cfg: &'a ProblemConfig,
        truth: &'a GroundTruth,
        feature_seed: &SeedSpec,
        n_test: Option<usize>,
        needs_spectrum: bool,
    ) -> Result<Self> {
        let (a_fake, a_included, a_missing) = draw_blocks(cfg.n, cfg, &with_split(feature_seed, Split::Train));
        let missing_signal = &a_missing * &truth.x_missing;
        let signal = &a_included * &truth.x_included + &missing_signal;
        let a_bar = hstack(&a_fake, &a_included);

        let test = n_test.map(|rows| {
            let (f, s, c) = draw_blocks(rows, cfg, &with_split(feature_seed, Split::Test));
            TestFeatures { signal: &s * &truth.x_included + &c * &truth.x_missing, a_bar: hstack(&f, &s) }
        });
        let spectrum = if needs_spectrum { Some(left_singular(&a_bar)?) } else { None };
        Ok(Realization { cfg, truth, a_bar, signal, missing_signal, test, gram: None, spectrum })
    }

    fn solver(&mut self, lambda: f64) -> Result<Solver> {
        if self.a_bar.ncols() == 0 {
            return Ok(Solver::Empty);
        }
        if lambda == 0.0 {
            return Ok(Solver::MinNorm(PseudoInverse::new(&self.a_bar)?));
        }
        let a_bar = &self.a_bar;
        let g = self.gram.get_or_insert_with(|| compact_gram(a_bar));
        Ok(Solver::Ridge(RidgeFactor::from_gram(g, lambda, RidgeFactor::preferred_form(a_bar))?))
    }

    /// Runs every noise draw in `noise_indices` at one λ.
    fn evaluate(
        &mut self,
        lambda: f64,
        noise_seed: impl Fn(u64) -> SeedSpec,
        noise_indices: std::ops::Range<u64>,
        bound: Option<(&BoundParams, &BoundReport)>,
    ) -> Result<Vec<TrialOutcome>> {
        let solver = self.solver(lambda)?;
        let cfg = self.cfg;
        let (p_fake, p_included, p_missing) = (cfg.p_fake, cfg.p_included, cfg.p_missing);
        let count = noise_indices.clone().count();
        let mut estimates = DMatrix::zeros(cfg.p_bar(), count);
        let mut outcomes = Vec::with_capacity(count);
        let mut test_noise = Vec::with_capacity(count);

        let (s_min, s_max, singular_event, g) = match &self.spectrum {
            Some((_, s)) if !s.is_empty() => {
                let (s_min, s_max) = (s[s.len() - 1], s[0]);
                let event = bound.map(|(p, _)| singular_event_check(s_min, s_max, cfg.n, cfg.p_bar(), p.t2));
                let g = if lambda > 0.0 && bound.is_some() { Some(g_coefficients(s, lambda)?) } else { None };
                (s_min, s_max, event, g)
            }
            _ => (f64::NAN, f64::NAN, None, None),
        };

        for (col, j) in noise_indices.enumerate() {
            let seed = noise_seed(j);
            let v = gen_noise(cfg.n, cfg.sigma_v, &with_split(&seed, Split::Train).with_block(Block::Noise));
            let y = &self.signal + &v;
            let x_bar = solver.solve(&self.a_bar, &y)?;
            let est = extend_estimate(&x_bar, p_fake, p_included, p_missing)?;
            let blocks = gen_error_analytic(self.truth, &est, cfg.sigma_v)?;
            let training_error = (&y - &self.a_bar * &x_bar).norm_squared();

            let chi2_event = match (&g, &self.spectrum, bound) {
                (Some(g), Some((u, _)), Some((params, report))) => {
                    let effective_noise = &self.missing_signal + &v;
                    let z = u.tr_mul(&effective_noise);
                    Some(chi2_event_check(g, &z, report.omega_z2, params.t1)?)
                }
                _ => None,
            };
            let below_bound = bound.filter(|_| lambda > 0.0).map(|(_, r)| blocks.jy < r.bound_value);

            estimates.set_column(col, &x_bar);
            if let Some(test) = &self.test {
                let rows = test.a_bar.nrows();
                test_noise.push(gen_noise(rows, cfg.sigma_v, &with_split(&seed, Split::Test).with_block(Block::Noise)));
            }
            outcomes.push(TrialOutcome {
                blocks,
                empirical: None,
                training_error,
                diagnostics: TrialDiagnostics { s_min, s_max, singular_event, chi2_event, below_bound },
            });
        }

        if let Some(test) = &self.test {
            let predictions = &test.a_bar * &estimates;
            for (col, (outcome, v_test)) in outcomes.iter_mut().zip(&test_noise).enumerate() {
                let residual = &test.signal + v_test - predictions.column(col);
                outcome.empirical = Some(EmpiricalError::from_residual(&residual));
            }
        }
        Ok(outcomes)
    }
}

fn feature_seed(master_seed: u64, cell: u64, realization: u64) -> SeedSpec {
    SeedSpec::new(master_seed, StreamId::new(cell, realization, 0, Split::Train))
}

fn noise_seed(master_seed: u64, cell: u64, realization: u64, noise: u64) -> SeedSpec {
    SeedSpec::new(master_seed, StreamId::new(cell, realization, noise, Split::Train))
}

/// One training/test trial.
///
/// Training and test features come from `feature_seed` (its split and block
/// fields are overridden); training and test noise from `noise_seed`.
pub fn run_trial(
    cfg: &ProblemConfig,
    truth: &GroundTruth,
    feature_seed: &SeedSpec,
    noise_seed: &SeedSpec,
    n_test: usize,
    bound_params: Option<&BoundParams>,
) -> Result<(ErrorReport, TrialDiagnostics)> {
    cfg.validate()?;
    if n_test == 0 {
        return Err(Error::Config("`n_test` must be at least 1".into()));
    }
    let bound = cell_bound(cfg, truth, bound_params)?;
    let mut realization = Realization::draw(cfg, truth, feature_seed, Some(n_test), bound_params.is_some())?;
    let noise = *noise_seed;
    let outcomes = realization.evaluate(
        cfg.lambda,
        |j| SeedSpec { stream: StreamId { noise: j, ..noise.stream }, ..noise },
        noise.stream.noise..noise.stream.noise + 1,
        bound_params.zip(bound.as_ref()),
    )?;
    let outcome = outcomes[0];
    Ok((outcome.report(), outcome.diagnostics))
}

fn cell_bound(cfg: &ProblemConfig, truth: &GroundTruth, params: Option<&BoundParams>) -> Result<Option<BoundReport>> {
    match params {
        Some(p) if cfg.lambda > 0.0 => Ok(Some(theorem_bound(truth, cfg, p)?)),
        _ => Ok(None),
    }
}

/// All trials of one realization, indexed `[λ][noise draw]`.
fn run_realization(
    cfg: &ProblemConfig,
    truth: &GroundTruth,
    lambdas: &[f64],
    bounds: &[Option<BoundReport>],
    settings: &MonteCarloSettings,
    realization: usize,
) -> Result<Vec<Vec<TrialOutcome>>> {
    let cell = cfg.p_fake as u64;
    let seed = settings.master_seed;
    let i = realization as u64;
    let mut draw = Realization::draw(
        cfg,
        truth,
        &feature_seed(seed, cell, i),
        Some(settings.n_test),
        settings.bound_params.is_some(),
    )?;
    lambdas
        .iter()
        .zip(bounds)
        .map(|(&lambda, bound)| {
            draw.evaluate(
                lambda,
                |j| noise_seed(seed, cell, i, j),
                0..settings.m_noise as u64,
                settings.bound_params.as_ref().zip(bound.as_ref()),
            )
        })
        .collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn rate(flags: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    let flags: Option<Vec<bool>> = flags.collect();
    flags.filter(|f| !f.is_empty()).map(|f| f.iter().filter(|&&b| b).count() as f64 / f.len() as f64)
}

/// Sequential reduction of `trials[realization][noise]` into a cell summary.
fn summarize(p_fake: usize, lambda: f64, bound: Option<BoundReport>, trials: &[&[TrialOutcome]]) -> CellSummary {
    let flat: Vec<&TrialOutcome> = trials.iter().flat_map(|r| r.iter()).collect();
    let realization_means: Vec<f64> = trials.iter().map(|r| mean(r.iter().map(|t| t.blocks.jy))).collect();
    let empirical: Option<Vec<f64>> = flat.iter().map(|t| t.empirical.map(|e| e.mean)).collect();
    let (jy_empirical_mean, jy_gap_std_error) = match empirical {
        Some(emp) => {
            let gaps: Vec<f64> = emp.iter().zip(&flat).map(|(e, t)| e - t.blocks.jy).collect();
            let se = sample_std(&gaps) / (gaps.len() as f64).sqrt();
            (Some(mean(trials.iter().map(|r| mean(r.iter().map(|t| t.empirical.unwrap().mean))))), Some(se))
        }
        None => (None, None),
    };
    CellSummary {
        p_fake,
        lambda,
        jy_analytic_mean: mean(realization_means.iter().copied()),
        jy_analytic_flat_mean: mean(flat.iter().map(|t| t.blocks.jy)),
        jy_analytic_std: sample_std(&realization_means),
        jy_empirical_mean,
        jy_gap_std_error,
        train_err_mean: mean(trials.iter().map(|r| mean(r.iter().map(|t| t.training_error)))),
        bound,
        coverage: rate(flat.iter().map(|t| t.diagnostics.below_bound)),
        chi2_event_rate: rate(flat.iter().map(|t| t.diagnostics.chi2_event)),
        singular_event_rate: rate(flat.iter().map(|t| t.diagnostics.singular_event)),
        trials: flat.len(),
    }
}

/// Nested Monte Carlo average for a single `(p_F, λ)` cell. Identical to the
/// matching row of a [`sweep`] with the same seed.
pub fn run_monte_carlo(cfg: &ProblemConfig, settings: &MonteCarloSettings) -> Result<CellSummary> {
    let plan = ExperimentPlan {
        base: *cfg,
        lambda_grid: vec![cfg.lambda],
        p_f_list: vec![cfg.p_fake],
        settings: *settings,
    };
    Ok(sweep(&plan)?.rows.remove(0))
}

/// Every `(p_F, λ)` cell of the plan, on the global rayon pool.
pub fn sweep(plan: &ExperimentPlan) -> Result<SweepResult> {
    plan.validate()?;
    let settings = &plan.settings;
    let mut rows = Vec::with_capacity(plan.p_f_list.len() * plan.lambda_grid.len());
    // Flatten (p_F, realization) pairs so small p_F lists still fill the pool.
    let jobs: Vec<(usize, usize)> = plan
        .p_f_list
        .iter()
        .flat_map(|&p| (0..settings.m_features).map(move |i| (p, i)))
        .collect();
    let truths = plan
        .p_f_list
        .iter()
        .map(|&p| make_ground_truth(&plan.base.with_p_fake(p)))
        .collect::<Result<Vec<_>>>()?;
    let bounds = plan
        .p_f_list
        .iter()
        .zip(&truths)
        .map(|(&p, truth)| {
            plan.lambda_grid
                .iter()
                .map(|&l| cell_bound(&plan.base.with_p_fake(p).with_lambda(l), truth, settings.bound_params.as_ref()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let index_of = |p: usize| plan.p_f_list.iter().position(|&q| q == p).expect("p_F from plan");
    let results: Vec<Result<Vec<Vec<TrialOutcome>>>> = jobs
        .par_iter()
        .map(|&(p, i)| {
            let k = index_of(p);
            run_realization(&plan.base.with_p_fake(p), &truths[k], &plan.lambda_grid, &bounds[k], settings, i)
        })
        .collect();
    let results: Vec<Vec<Vec<TrialOutcome>>> = results.into_iter().collect::<Result<_>>()?;

    for (k, &p_fake) in plan.p_f_list.iter().enumerate() {
        let block = &results[k * settings.m_features..(k + 1) * settings.m_features];
        for (l, &lambda) in plan.lambda_grid.iter().enumerate() {
            let trials: Vec<&[TrialOutcome]> = block.iter().map(|r| r[l].as_slice()).collect();
            rows.push(summarize(p_fake, lambda, bounds[k][l], &trials));
        }
    }
    Ok(SweepResult { rows })
}

/// [`sweep`] on a dedicated pool of `workers` threads; the output does not
/// depend on `workers`.
pub fn sweep_with_workers(plan: &ExperimentPlan, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| sweep(plan))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: usize,
    /// Trials with `J_y` strictly below the bound.
    pub covered: usize,
    pub coverage: f64,
    pub prob_floor: f64,
    /// `prob_floor − 3·√(floor·(1 − floor)/trials)`, or `None` when vacuous.
    pub acceptance_threshold: Option<f64>,
    pub vacuous: bool,
    pub passed: bool,
    pub bound: BoundReport,
    pub jy_mean: f64,
    pub jy_max: f64,
}

/// Binomial slack `floor − 3·√(floor(1 − floor)/trials)`.
pub fn coverage_threshold(prob_floor: f64, trials: usize) -> f64 {
    prob_floor - 3.0 * (prob_floor * (1.0 - prob_floor) / trials as f64).sqrt()
}

/// Fraction of independent training draws whose exact generalization error
/// falls below the high-probability bound.
pub fn coverage_estimate(
    cfg: &ProblemConfig,
    params: &BoundParams,
    trials: usize,
    master_seed: u64,
) -> Result<CoverageReport> {
    cfg.validate()?;
    if cfg.lambda.is_nan() || cfg.lambda <= 0.0 {
        return Err(Error::LambdaZero(cfg.lambda));
    }
    if trials == 0 {
        return Err(Error::Config("`trials` must be at least 1".into()));
    }
    let truth = make_ground_truth(cfg)?;
    let bound = theorem_bound(&truth, cfg, params)?;
    let errors: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut draw = Realization::draw(cfg, &truth, &feature_seed(master_seed, COVERAGE_CELL, t), None, false)?;
            let out = draw.evaluate(cfg.lambda, |j| noise_seed(master_seed, COVERAGE_CELL, t, j), 0..1, None)?;
            Ok(out[0].blocks.jy)
        })
        .collect::<Result<_>>()?;
    let covered = errors.iter().filter(|&&jy| jy < bound.bound_value).count();
    let coverage = covered as f64 / trials as f64;
    let threshold = (!bound.vacuous).then(|| coverage_threshold(bound.prob_floor, trials));
    Ok(CoverageReport {
        trials,
        covered,
        coverage,
        prob_floor: bound.prob_floor,
        acceptance_threshold: threshold,
        vacuous: bound.vacuous,
        passed: threshold.is_none_or(|t| coverage >= t),
        bound,
        jy_mean: mean(errors.iter().copied()),
        jy_max: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationOutcome {
    pub interpolated: bool,
    /// `‖y − ŷ‖ / ‖y‖` on the training set.
    pub relative_residual: f64,
}

/// Minimum-norm fit of an overparameterized model (`n < p̄`) reproduces the
/// training responses exactly, even with no included features.
pub fn interpolation_check(cfg: &ProblemConfig, master_seed: u64) -> Result<InterpolationOutcome> {
    cfg.validate()?;
    if cfg.n >= cfg.p_bar() {
        return Err(Error::Config(format!(
            "interpolation needs n < p_fake + p_included, got n = {} and p_bar = {}",
            cfg.n,
            cfg.p_bar()
        )));
    }
    if cfg.lambda != 0.0 {
        return Err(Error::Config(format!("interpolation check uses lambda = 0, got {}", cfg.lambda)));
    }
    let truth = make_ground_truth(cfg)?;
    let data = gen_dataset(
        cfg,
        &truth,
        cfg.n,
        &SeedSpec::new(master_seed, StreamId::new(INTERPOLATION_CELL, 0, 0, Split::Train)),
    )?;
    let a_bar = data.a_bar();
    let x_bar = PseudoInverse::new(&a_bar)?.apply(&data.response)?;
    let residual = (&data.response - &a_bar * &x_bar).norm();
    let relative_residual = residual / data.response.norm();
    Ok(InterpolationOutcome { interpolated: residual <= 1e-8 * data.response.norm(), relative_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ProblemConfig {
        ProblemConfig {
            n: 30,
            p_fake: 10,
            p_included: 12,
            p_missing: 8,
            sigma_v: 1.0,
            power: 20.0,
            r_s: 0.8,
            lambda: 0.5,
        }
    }

    fn settings(m_features: usize, m_noise: usize) -> MonteCarloSettings {
        MonteCarloSettings { m_features, m_noise, n_test: 400, master_seed: 42, bound_params: None }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small_cfg();
        let truth = make_ground_truth(&cfg).unwrap();
        let f = feature_seed(1, 2, 3);
        let v = noise_seed(1, 2, 3, 4);
        let a = run_trial(&cfg, &truth, &f, &v, 100, None).unwrap();
        let b = run_trial(&cfg, &truth, &f, &v, 100, None).unwrap();
        assert_eq!(a.0, b.0);
        let c = run_trial(&cfg, &truth, &f, &noise_seed(1, 2, 3, 5), 100, None).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn noiseless_well_posed_least_squares_recovers_truth() {
        let cfg = ProblemConfig { p_fake: 0, p_missing: 0, sigma_v: 0.0, r_s: 1.0, lambda: 0.0, ..small_cfg() };
        let truth = make_ground_truth(&cfg).unwrap();
        let (report, _) = run_trial(&cfg, &truth, &feature_seed(9, 0, 0), &noise_seed(9, 0, 0, 0), 50, None).unwrap();
        assert!(report.jy_analytic <= 1e-10, "{}", report.jy_analytic);
    }

    #[test]
    fn overparameterized_min_norm_interpolates() {
        let cfg = ProblemConfig { p_fake: 40, lambda: 0.0, ..small_cfg() };
        let truth = make_ground_truth(&cfg).unwrap();
        let (report, _) = run_trial(&cfg, &truth, &feature_seed(9, 0, 0), &noise_seed(9, 0, 0, 0), 50, None).unwrap();
        // ‖y‖² is of order n·(P + σ²) = 630 here.
        assert!(report.training_error <= 1e-10, "{}", report.training_error);
    }

    #[test]
    fn single_trial_cell_equals_run_trial() {
        let cfg = small_cfg();
        let truth = make_ground_truth(&cfg).unwrap();
        let s = settings(1, 1);
        let cell = run_monte_carlo(&cfg, &s).unwrap();
        let (report, _) = run_trial(
            &cfg,
            &truth,
            &feature_seed(s.master_seed, cfg.p_fake as u64, 0),
            &noise_seed(s.master_seed, cfg.p_fake as u64, 0, 0),
            s.n_test,
            None,
        )
        .unwrap();
        assert_eq!(cell.jy_analytic_mean, report.jy_analytic);
        assert_eq!(cell.jy_empirical_mean, report.jy_empirical.map(|e| e.mean));
        assert_eq!(cell.train_err_mean, report.training_error);
        assert_eq!(cell.trials, 1);
    }

    #[test]
    fn nested_mean_equals_flat_mean() {
        let cell = run_monte_carlo(&small_cfg(), &settings(4, 5)).unwrap();
        assert_eq!(cell.trials, 20);
        let (a, b) = (cell.jy_analytic_mean, cell.jy_analytic_flat_mean);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn coverage_rejects_zero_lambda() {
        let cfg = ProblemConfig { lambda: 0.0, ..small_cfg() };
        assert!(matches!(
            coverage_estimate(&cfg, &BoundParams::floor_098(), 10, 1),
            Err(Error::LambdaZero(_))
        ));
    }

    #[test]
    fn vacuous_floor_passes() {
        let r = coverage_estimate(&small_cfg(), &BoundParams::new(0.0, 0.0).unwrap(), 5, 1).unwrap();
        assert!(r.vacuous);
        assert!(r.passed);
        assert_eq!(r.acceptance_threshold, None);
    }

    #[test]
    fn interpolation_preconditions() {
        let at_threshold = ProblemConfig { n: 50, p_fake: 20, p_included: 30, lambda: 0.0, ..small_cfg() };
        assert!(matches!(interpolation_check(&at_threshold, 1), Err(Error::Config(_))));
        let ok = ProblemConfig { n: 50, p_fake: 30, p_included: 30, lambda: 0.0, ..small_cfg() };
        assert!(interpolation_check(&ok, 1).unwrap().interpolated);
        let ridge = ProblemConfig { lambda: 1.0, ..ok };
        assert!(matches!(interpolation_check(&ridge, 1), Err(Error::Config(_))));
    }

    #[test]
    fn plan_validation() {
        let plan = ExperimentPlan {
            base: small_cfg(),
            lambda_grid: vec![0.1, 1.0],
            p_f_list: vec![0, 10],
            settings: settings(2, 2),
        };
        assert!(plan.validate().is_ok());
        let empty = ExperimentPlan { lambda_grid: vec![], ..plan.clone() };
        assert!(matches!(empty.validate(), Err(Error::Config(m)) if m.contains("lambda_grid")));
        let unsorted = ExperimentPlan { lambda_grid: vec![1.0, 0.1], ..plan.clone() };
        assert!(unsorted.validate().is_err());
        let dup = ExperimentPlan { p_f_list: vec![3, 3], ..plan.clone() };
        assert!(matches!(dup.validate(), Err(Error::Config(m)) if m.contains("p_f_list")));
        let zero_m = ExperimentPlan { settings: settings(0, 2), ..plan };
        assert!(matches!(zero_m.validate(), Err(Error::Config(m)) if m.contains("m_features")));
    }
}
