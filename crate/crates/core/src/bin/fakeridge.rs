use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fakeridge::bound::{theorem_bound, BoundParams};
use fakeridge::experiment::{coverage_estimate, interpolation_check, sweep_with_workers};
use fakeridge::model::make_ground_truth;
use fakeridge::planfile::{load_config, PlanFile};
use fakeridge::plot::{render_svg, Metric};
use fakeridge::report::{read_sweep_csv, write_bound_csv, write_metadata_json, write_sweep_csv, BoundRow};
use fakeridge::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "fakeridge", version, about = "Ridge regression with fake and missing features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a λ × p_F Monte Carlo sweep and write sweep.csv and plan.json.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Worker threads; does not change the results.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Estimate how often the exact error falls below the high-probability bound.
    Coverage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Overrides the config's lambda.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Check that the minimum-norm fit interpolates the training data (n < p_fake + p_included).
    Interpolate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Tabulate the bound for every cell of a plan with lambda > 0.
    BoundTable {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's t1.
        #[arg(long)]
        t1: Option<f64>,
        /// Overrides the plan's t2.
        #[arg(long)]
        t2: Option<f64>,
        /// Output CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a sweep CSV as an SVG chart.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotMetric::Empirical)]
        metric: PlotMetric,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotMetric {
    Empirical,
    Analytic,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn io_failure(context: &str) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Sweep { plan, out, seed, workers } => {
            if workers == 0 {
                return Err(Failure::Config("`--workers` must be at least 1".into()));
            }
            let plan = PlanFile::load(&plan)?.into_plan(seed)?;
            eprintln!(
                "sweep: {} p_F values x {} lambdas, {} trials per cell, {workers} worker(s)",
                plan.p_f_list.len(),
                plan.lambda_grid.len(),
                plan.settings.trials()
            );
            let result = sweep_with_workers(&plan, workers)?;
            fs::create_dir_all(&out).map_err(io_failure("creating output directory"))?;
            let csv = File::create(out.join("sweep.csv")).map_err(io_failure("sweep.csv"))?;
            write_sweep_csv(&result, BufWriter::new(csv))?;
            let json = File::create(out.join("plan.json")).map_err(io_failure("plan.json"))?;
            write_metadata_json(&plan, BufWriter::new(json))?;
            eprintln!("wrote {}", out.display());
            Ok(0)
        }
        Command::Coverage { config, seed, t1, t2, trials, lambda } => {
            let mut cfg = load_config(&config)?;
            if let Some(l) = lambda {
                cfg.lambda = l;
            }
            if cfg.lambda.is_nan() || cfg.lambda <= 0.0 {
                return Err(Failure::Config(format!(
                    "the bound requires lambda > 0 (got lambda = {})",
                    cfg.lambda
                )));
            }
            let params = BoundParams::new(t1, t2)?;
            let report = coverage_estimate(&cfg, &params, trials, seed)?;
            print_json(&report)?;
            if report.vacuous {
                eprintln!("probability floor {} is not positive: the bound is vacuous", report.prob_floor);
            }
            Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Interpolate { config, seed } => {
            let cfg = load_config(&config)?;
            let outcome = interpolation_check(&cfg, seed)?;
            print_json(&outcome)?;
            Ok(if outcome.interpolated { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::BoundTable { plan, t1, t2, out } => {
            let file = PlanFile::load(&plan)?;
            let from_plan = file.bound_params()?;
            let params = match (t1.or(from_plan.map(|p| p.t1)), t2.or(from_plan.map(|p| p.t2))) {
                (Some(t1), Some(t2)) => BoundParams::new(t1, t2)?,
                _ => return Err(Failure::Config("bound-table needs `t1` and `t2` (flags or plan keys)".into())),
            };
            // The master seed does not affect the bound.
            let plan = file.into_plan(0)?;
            let mut rows = Vec::new();
            for &p_fake in &plan.p_f_list {
                for &lambda in plan.lambda_grid.iter().filter(|&&l| l > 0.0) {
                    let cfg = plan.base.with_p_fake(p_fake).with_lambda(lambda);
                    let truth = make_ground_truth(&cfg)?;
                    rows.push(BoundRow::new(&cfg, &params, &theorem_bound(&truth, &cfg, &params)?));
                }
            }
            match out {
                Some(path) => {
                    let f = File::create(&path).map_err(io_failure("bound table"))?;
                    write_bound_csv(&rows, BufWriter::new(f))?;
                }
                None => write_bound_csv(&rows, io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Plot { input, out, metric } => {
            let f = File::open(&input).map_err(|e| Failure::Config(format!("{}: {e}", input.display())))?;
            let rows = read_sweep_csv(f)?;
            let metric = match metric {
                PlotMetric::Empirical => Metric::Empirical,
                PlotMetric::Analytic => Metric::Analytic,
            };
            let svg = render_svg(&rows, metric)?;
            let mut f = File::create(&out).map_err(io_failure("svg output"))?;
            f.write_all(svg.as_bytes()).map_err(io_failure("svg output"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
