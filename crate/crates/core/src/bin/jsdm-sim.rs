//! Batch CLI: run scenarios, sweep the cone parameter, verify the
//! analytical bounds, and render plots from result CSVs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jsdm_sim::harness::{self, RunOverrides};
use jsdm_sim::plot;
use jsdm_sim::scenario::ScenarioSpec;
use jsdm_sim::JsdmError;

#[derive(Parser)]
#[command(name = "jsdm-sim", version, about = "Two-stage MU-MIMO scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Worker thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for CSV/SVG artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (K, scheme, parameter) cell of a scenario file.
    Run {
        scenario_file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Sweep the cone parameter over a grid and report the per-K optimum.
    SweepAlpha {
        scenario_file: PathBuf,
        /// Comma-separated alpha values, each in (0, 1).
        #[arg(long, value_delimiter = ',', default_value = "0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9")]
        alpha_grid: Vec<f64>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the analytical verification suite.
    Verify {
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Render SVG charts from a results CSV.
    Plot {
        csv: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn overrides(opts: &CommonOpts) -> RunOverrides {
    RunOverrides {
        seed: opts.seed,
        trials: opts.trials,
        threads: opts.threads,
        out_dir: Some(opts.out_dir.clone()),
    }
}

/// Exit code for a failed run: 2 for the BD gate, 1 otherwise.
fn failure_code(e: &JsdmError) -> ExitCode {
    match e {
        JsdmError::BdCheckFailed { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario_file,
            opts,
        } => {
            let spec = match ScenarioSpec::load(&scenario_file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match harness::run_scenario(&spec, &overrides(&opts)) {
                Ok(rows) => {
                    let path = opts.out_dir.join(format!("{}.csv", spec.name));
                    if let Err(e) = harness::write_csv(&rows, &path) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                    println!("wrote {} rows to {}", rows.len(), path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    failure_code(&e)
                }
            }
        }
        Command::SweepAlpha {
            scenario_file,
            alpha_grid,
            opts,
        } => {
            let spec = match ScenarioSpec::load(&scenario_file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match harness::alpha_sweep(&spec, &alpha_grid, &overrides(&opts)) {
                Ok((rows, best)) => {
                    let path = opts.out_dir.join(format!("{}-alpha-sweep.csv", spec.name));
                    if let Err(e) = harness::write_csv(&rows, &path) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                    for (k, alpha) in best {
                        println!("K={k}: best alpha = {alpha}");
                    }
                    println!("wrote {} rows to {}", rows.len(), path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    failure_code(&e)
                }
            }
        }
        Command::Verify { opts } => {
            let seed = opts.seed.unwrap_or(0xBEEF);
            let items = harness::verify_suite(seed);
            let mut all_pass = true;
            for item in &items {
                println!(
                    "{} {} — {}",
                    if item.pass { "PASS" } else { "FAIL" },
                    item.name,
                    item.detail
                );
                all_pass &= item.pass;
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Command::Plot { csv, opts } => match plot::plot_csv(&csv, &opts.out_dir) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
