use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcb_harness::{load_aggregate, load_config, replay, run_experiment, HarnessError};

#[derive(Parser)]
#[command(name = "lcb", version, about = "Bandits with long-term constraints: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (horizon, repetition) cell of a config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides `workers`; 0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed (overrides `params.seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the bound verdicts of an aggregate JSON; exit 3 if any fails.
    VerifyBounds { aggregate: PathBuf },
    /// Recompute trace metrics from a per-run CSV.
    Replay { trace: PathBuf },
    /// Run the built-in property checks.
    Selftest,
}

const EXIT_BOUND_FAILURE: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.params.seed = s;
            }
            let report = run_experiment(&cfg)?;
            for h in &report.aggregate.horizons {
                println!(
                    "T={:<7} runs={:<3} R_T {:>10.2} ± {:<9.2} V_T {:>10.2} ± {:<9.2}",
                    h.horizon,
                    h.runs,
                    h.regret.mean,
                    h.regret.stddev,
                    h.violation.mean,
                    h.violation.stddev
                );
            }
            if let Some(s) = report.aggregate.scaling {
                println!(
                    "slopes: regret {:.3}, violation {:.3}",
                    s.regret_slope, s.violation_slope
                );
            }
            println!("wrote {} files to {}", report.files.len(), cfg.output_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyBounds { aggregate } => {
            let agg = load_aggregate(&aggregate)?;
            for v in &agg.verdicts {
                println!(
                    "{:<5} {:<32} observed {:<12.6} bound {:<12.6} margin {:.6}",
                    if v.holds { "ok" } else { "FAIL" },
                    v.name,
                    v.observed,
                    v.bound_value,
                    v.margin
                );
            }
            Ok(if agg.all_hold() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_BOUND_FAILURE)
            })
        }
        Command::Replay { trace } => {
            let report = replay(&trace)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let checks = lcb_harness::selftest::run_selftest();
            for c in &checks {
                println!("{:<5} {} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}
