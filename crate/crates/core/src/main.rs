use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lagrangian_pc::bench::{
    compare_schedules, fit_rate_with_floor, run_experiment, ExperimentSpec, RateMetric, Window,
    DEFAULT_FLOOR,
};
use lagrangian_pc::framework::{read_trace_csv, write_trace_csv, write_trace_json, Check};
use lagrangian_pc::problems::{generate_instance, InstanceSpec, Template};
use lagrangian_pc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lagrangian-pc",
    version,
    about = "Prediction-correction Lagrangian solvers and rate harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic instance.
    Generate {
        #[arg(long)]
        template: Template,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 20)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        lipschitz: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        trace_json: Option<PathBuf>,
    },
    /// Run an experiment with condition checks only; exit 3 on violation.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the empirical order of a trace metric.
    Rates {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "ergodic-gap")]
        metric: RateMetric,
        /// `lo:hi` in iteration counts; defaults to `[K/40, K]`.
        #[arg(long)]
        window: Option<Window>,
        #[arg(long, default_value_t = DEFAULT_FLOOR)]
        floor: f64,
    },
    /// Compare schedules on a shared problem and method.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "ergodic-gap")]
        metric: RateMetric,
        #[arg(long)]
        window: Option<Window>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            template,
            seed,
            dims,
            l,
            sigma,
            lipschitz,
            mu,
            out,
        } => {
            let spec = InstanceSpec {
                template,
                dims,
                l,
                sigma,
                lipschitz,
                mu,
                seed,
            };
            let problem = generate_instance::<f64>(&spec)?;
            problem.save(&out)?;
            println!(
                "wrote {} ({} blocks, dims {:?}, l = {})",
                out.display(),
                problem.num_blocks(),
                problem.block_dims(),
                problem.constraints()
            );
        }
        Command::Run {
            config,
            trace,
            trace_json,
        } => {
            let spec = ExperimentSpec::load(&config)?;
            let t = run_experiment(&spec)?;
            let rows = t.rows();
            write_trace_csv(&rows, &trace)?;
            if let Some(p) = trace_json {
                write_trace_json(&rows, p)?;
            }
            if let Some(last) = rows.last() {
                println!(
                    "{}: K = {}, ergodic gap {:.3e}, ergodic feasibility {:.3e}",
                    t.method,
                    last.k + 1,
                    last.lagrangian_gap_ergodic,
                    last.feasibility_ergodic
                );
            }
            for v in &t.violations {
                eprintln!("violation: {v}");
            }
            println!(
                "{} check violation(s); trace written to {}",
                t.violations.len(),
                trace.display()
            );
        }
        Command::Check { config } => {
            let mut spec = ExperimentSpec::load(&config)?;
            if spec.checks.is_empty() {
                spec.checks = vec![
                    Check::Cc1,
                    Check::Cc3,
                    Check::Lemma2,
                    Check::PredictionInequality,
                ];
            }
            let t = run_experiment(&spec)?;
            let checked = t.records.len();
            for v in t.violations.iter().take(20) {
                eprintln!("violation: {v}");
            }
            if let Some(first) = t.violations.first() {
                return Err(Error::CheckViolation {
                    count: t.violations.len(),
                    first: first.to_string(),
                });
            }
            println!(
                "{}: {checked} checked iterations, all conditions hold",
                t.method
            );
        }
        Command::Rates {
            trace,
            metric,
            window,
            floor,
        } => {
            let rows = read_trace_csv(&trace)?;
            let k = rows.last().map(|r| r.k + 1).unwrap_or(0);
            let w = window.unwrap_or_else(|| Window::default_for(k));
            let fit = fit_rate_with_floor(&rows, metric, w, floor)?;
            println!(
                "metric {metric} window {w}: slope {:.4} r2 {:.4} ({} points)",
                fit.slope, fit.r_squared, fit.points
            );
        }
        Command::Compare {
            configs,
            metric,
            window,
            json,
        } => {
            let specs = configs
                .iter()
                .map(ExperimentSpec::load)
                .collect::<Result<Vec<_>>>()?;
            let report = compare_schedules(&specs, metric, window)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
