//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use fakeridge::bound::{chi2_event_check, g_coefficients, singular_event_check, BoundParams};
use fakeridge::datagen::{gen_dataset, SeedSpec, Split, StreamId};
use fakeridge::estimator::{
    extend_estimate, gram, min_norm_solve, ridge_solve, singular_values, solve, RidgeFactor, RidgeForm,
};
use fakeridge::experiment::{coverage_estimate, interpolation_check};
use fakeridge::metrics::{gen_error_analytic, gen_error_empirical};
use fakeridge::model::make_ground_truth;
use fakeridge::report::{read_sweep_csv, SweepCsvRow};
use fakeridge::ProblemConfig;

use common::{gaussian_matrix, gaussian_vector, primal_ridge, relative_gap, rng};

const DESK_PLAN: &str = r#"
n = 200
p_included = 100
p_missing = 100
sigma_v = 10.0
power = 200.0
r_s = 0.9
lambda_grid = { from = 1e-3, to = 1e3, points = 12 }
p_f_list = [0, 100, 300, 500]
m_features = 20
m_noise = 20
n_test = 5000
"#;

const SEED: u64 = 20240601;

type Outcome = Result<String, String>;

fn cfg(n: usize, p_fake: usize, p_included: usize, p_missing: usize, lambda: f64) -> ProblemConfig {
    ProblemConfig { n, p_fake, p_included, p_missing, sigma_v: 10.0, power: 200.0, r_s: 0.9, lambda }
}

fn run_sweep(plan: &Path, out: &Path, workers: usize) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fakeridge"))
        .args(["sweep", "--seed", &SEED.to_string(), "--workers", &workers.to_string()])
        .arg("--plan")
        .arg(plan)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| format!("cannot launch CLI: {e}"))?;
    if !status.success() {
        return Err(format!("sweep exited with {status}"));
    }
    std::fs::read(out.join("sweep.csv")).map_err(|e| e.to_string())
}

fn jy(rows: &[SweepCsvRow], p_fake: usize, lambda: f64) -> f64 {
    rows.iter()
        .find(|r| r.p_fake == p_fake && r.lambda == lambda)
        .map(|r| r.jy_empirical_mean.expect("sweep writes empirical means"))
        .expect("cell present")
}

fn curve_orderings(csv: &[u8]) -> Outcome {
    let rows = read_sweep_csv(csv).map_err(|e| e.to_string())?;
    let mut lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() != 12 || rows.len() != 48 {
        return Err(format!("expected 12 lambdas x 4 p_F, got {} rows", rows.len()));
    }
    for &l in &lambdas {
        let base = jy(&rows, 0, l);
        for p in [100, 300, 500] {
            if jy(&rows, p, l) <= base {
                return Err(format!("(a) p_F={p} is not above p_F=0 at lambda={l}"));
            }
        }
    }
    let (lo, hi) = (lambdas[0], lambdas[11]);
    let (j100, j300, j500) = (jy(&rows, 100, lo), jy(&rows, 300, lo), jy(&rows, 500, lo));
    if !(j100 > j300 && j100 > j500) {
        return Err(format!("(b) at lambda={lo}: J(100)={j100:.2}, J(300)={j300:.2}, J(500)={j500:.2}"));
    }
    let (k100, k300, k500) = (jy(&rows, 100, hi), jy(&rows, 300, hi), jy(&rows, 500, hi));
    if !(k100 < k300 && k100 < k500) {
        return Err(format!("(c) at lambda={hi}: J(100)={k100:.2}, J(300)={k300:.2}, J(500)={k500:.2}"));
    }
    Ok(format!(
        "lambda={lo}: J(100)={j100:.1} > J(300)={j300:.1}, J(500)={j500:.1}; \
         lambda={hi}: J(100)={k100:.1} < J(300)={k300:.1}, J(500)={k500:.1}"
    ))
}

fn criterion_2() -> Outcome {
    let params = BoundParams::floor_098();
    let mut notes = Vec::new();
    for (k, c) in [cfg(200, 100, 100, 100, 1.0), cfg(300, 0, 100, 50, 10.0), cfg(100, 300, 50, 50, 0.1)]
        .iter()
        .enumerate()
    {
        let report = coverage_estimate(c, &params, 500, SEED + k as u64).map_err(|e| e.to_string())?;
        let threshold = report.acceptance_threshold.ok_or("bound unexpectedly vacuous")?;
        notes.push(format!("{:.3}", report.coverage));
        if !(report.coverage >= threshold && report.coverage >= 0.96) {
            return Err(format!("config {k}: coverage {} below {threshold:.4}", report.coverage));
        }
    }
    Ok(format!("coverage [{}] at floor {:.3}", notes.join(", "), params.prob_floor()))
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let (mut worst_dual, mut worst_min_norm) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let (n, p) = if k % 2 == 0 {
            (r.random_range(40..90), r.random_range(5..35))
        } else {
            (r.random_range(5..35), r.random_range(40..90))
        };
        let a = gaussian_matrix(&mut r, n, p);
        let y = gaussian_vector(&mut r, n);
        let lambda = [1e-3, 1.0, 1e3][k % 3];
        let dual = RidgeFactor::from_gram(&gram(&a), lambda, RidgeForm::Dual)
            .and_then(|f| f.solve(&a, &y))
            .map_err(|e| e.to_string())?;
        worst_dual = worst_dual.max(relative_gap(&dual, &primal_ridge(&a, &y, lambda)));
        let tiny = ridge_solve(&a, &y, 1e-10).map_err(|e| e.to_string())?;
        let mn = min_norm_solve(&a, &y).map_err(|e| e.to_string())?;
        worst_min_norm = worst_min_norm.max(relative_gap(&tiny, &mn));
    }
    let detail = format!("max dual/primal gap {worst_dual:.2e}, max ridge(1e-10)/min-norm gap {worst_min_norm:.2e}");
    if worst_dual <= 1e-8 && worst_min_norm <= 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let mut no_signal = cfg(50, 100, 0, 100, 0.0);
    no_signal.r_s = 0.0;
    let mixed = cfg(50, 60, 20, 20, 0.0);
    let mut worst = 0.0f64;
    for c in [no_signal, mixed] {
        for seed in 0..20 {
            let outcome = interpolation_check(&c, seed).map_err(|e| e.to_string())?;
            worst = worst.max(outcome.relative_residual);
            if !outcome.interpolated {
                return Err(format!("p_F={} seed {seed}: residual {:.2e}", c.p_fake, outcome.relative_residual));
            }
        }
    }
    Ok(format!("max relative training residual {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut within = 0;
    let mut worst_identity = 0.0f64;
    for k in 0..100u64 {
        let c = ProblemConfig {
            n: r.random_range(10..80),
            p_fake: r.random_range(0..40),
            p_included: r.random_range(1..40),
            p_missing: r.random_range(1..40),
            sigma_v: r.random_range(0.1..3.0),
            power: r.random_range(1.0..50.0),
            r_s: r.random_range(0.05..0.95),
            lambda: if k % 5 == 0 { 0.0 } else { 10f64.powf(r.random_range(-3.0..3.0)) },
        };
        let truth = make_ground_truth(&c).map_err(|e| e.to_string())?;
        let train = gen_dataset(&c, &truth, c.n, &SeedSpec::new(SEED, StreamId::new(k, 0, 0, Split::Train)))
            .map_err(|e| e.to_string())?;
        let test = gen_dataset(&c, &truth, 20_000, &SeedSpec::new(SEED, StreamId::new(k, 0, 0, Split::Test)))
            .map_err(|e| e.to_string())?;
        let x_bar = solve(&train.a_bar(), &train.response, c.lambda).map_err(|e| e.to_string())?;
        let est = extend_estimate(&x_bar, c.p_fake, c.p_included, c.p_missing).map_err(|e| e.to_string())?;
        let blocks = gen_error_analytic(&truth, &est, c.sigma_v).map_err(|e| e.to_string())?;

        // Direct evaluation of ‖x − x̂‖² + σ² over the stacked coefficient vector.
        let stacked_truth: Vec<f64> =
            std::iter::repeat_n(0.0, c.p_fake).chain(truth.x_included.iter().copied()).chain(truth.x_missing.iter().copied()).collect();
        let stacked_est: Vec<f64> = x_bar.iter().copied().chain(std::iter::repeat_n(0.0, c.p_missing)).collect();
        let direct = (DVector::from_vec(stacked_truth) - DVector::from_vec(stacked_est)).norm_squared() + c.sigma_v.powi(2);
        let summed = blocks.fake + blocks.included + blocks.missing + blocks.noise_var;
        let identity = ((blocks.jy - summed).abs()).max((blocks.jy - direct).abs()) / blocks.jy;
        worst_identity = worst_identity.max(identity);

        let emp = gen_error_empirical(&test, &est).map_err(|e| e.to_string())?;
        if (emp.mean - blocks.jy).abs() <= 3.0 * emp.standard_error() {
            within += 1;
        }
    }
    let detail = format!("identity max rel err {worst_identity:.2e}, empirical within 3 SE on {within}/100");
    if worst_identity <= 1e-12 && within >= 95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn binomial_floor(p: f64, draws: usize) -> f64 {
    p - 3.0 * (p * (1.0 - p) / draws as f64).sqrt()
}

fn criterion_6() -> Outcome {
    let (t1, t2, draws, n, p) = (1.0f64, 2.0f64, 1000usize, 100usize, 400usize);
    let omega2 = 4.0f64;
    let mut r = rng(6);
    let (mut chi2_hits, mut sv_hits) = (0usize, 0usize);
    for _ in 0..draws {
        let a = gaussian_matrix(&mut r, n, p);
        let s = singular_values(&a).map_err(|e| e.to_string())?;
        let g = g_coefficients(&s, 1.0).map_err(|e| e.to_string())?;
        let z = DVector::from_fn(g.len(), |_, _| omega2.sqrt() * r.sample::<f64, _>(StandardNormal));
        if chi2_event_check(&g, &z, omega2, t1).map_err(|e| e.to_string())? {
            chi2_hits += 1;
        }
        if singular_event_check(s.min(), s.max(), n, p, t2) {
            sv_hits += 1;
        }
    }
    let chi2_rate = chi2_hits as f64 / draws as f64;
    let sv_rate = sv_hits as f64 / draws as f64;
    let chi2_need = binomial_floor(1.0 - (-t1).exp(), draws);
    let sv_need = binomial_floor(1.0 - 2.0 * (-t2 * t2 / 2.0).exp(), draws);
    let detail = format!("chi2 {chi2_rate:.3} (need {chi2_need:.3}), singular {sv_rate:.3} (need {sv_need:.3})");
    if chi2_rate >= chi2_need && sv_rate >= sv_need {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    for k in 0..50 {
        let (n, p) = (r.random_range(2..60), r.random_range(2..60));
        let lambda = 10f64.powf(r.random_range(-4.0..4.0));
        let a = gaussian_matrix(&mut r, n, p);
        let s = singular_values(&a).map_err(|e| e.to_string())?;
        let g = g_coefficients(&s, lambda).map_err(|e| e.to_string())?;
        let cap = s.max().powi(2) / (s.min().powi(2) + lambda).powi(2);
        if let Some(bad) = g.iter().find(|&&gi| gi > cap) {
            return Err(format!("instance {k}: g = {bad} exceeds {cap}"));
        }
    }
    Ok("every g_i within s_max^2/(s_min^2+lambda)^2 on 50 instances".into())
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let plan = dir.path().join("desk.plan");
    std::fs::write(&plan, DESK_PLAN).expect("write plan");

    let start = Instant::now();
    let first = run_sweep(&plan, &dir.path().join("w1"), 1);
    let sweep_secs = start.elapsed().as_secs_f64();

    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    results.push((1, first.as_deref().map_err(Clone::clone).and_then(curve_orderings), sweep_secs));

    let timed = |f: fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        (out, t.elapsed().as_secs_f64())
    };
    for (id, f) in [(2, criterion_2 as fn() -> Outcome), (3, criterion_3), (4, criterion_4), (5, criterion_5), (6, criterion_6), (7, criterion_7)] {
        let (out, secs) = timed(f);
        results.push((id, out, secs));
    }

    let t = Instant::now();
    let rerun = run_sweep(&plan, &dir.path().join("w3"), 3);
    let determinism = match (&first, &rerun) {
        (Ok(a), Ok(b)) if a == b => Ok(format!("{} bytes identical for 1 and 3 workers", a.len())),
        (Ok(_), Ok(_)) => Err("CSV differs between worker counts".into()),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    results.push((8, determinism, t.elapsed().as_secs_f64()));

    let mut failed = 0;
    for (id, outcome, secs) in &results {
        match outcome {
            Ok(msg) => println!("criterion {id}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id}: FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
