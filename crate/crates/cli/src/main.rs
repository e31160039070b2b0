use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use leray_core::diagnostics::{alpha_sweep_with, n_sweep, ALPHA_SLOPE_TOLERANCE};
use leray_core::output::{multiplier_table, sweep_csv, write_atomic};
use leray_core::runner::{initial_state, run_config, ENERGY_FILE, SUMMARY_FILE};
use leray_core::validation::{run_selected, Options, CRITERIA};
use leray_core::{parse_config, RunConfig, SweepReport};

/// Exit status for checks that ran to completion and failed.
const CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "leray", version, about = "Pseudo-spectral Leray-alpha / deconvolution / MHD solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write energy.csv, summary.txt and checkpoints.
    Run { config: PathBuf },
    /// Filter-width convergence sweep on the configured initial field.
    SweepAlpha {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Expected log-log slope; defaults to 2 theta.
        #[arg(long)]
        target_slope: Option<f64>,
        /// Sobolev index of the error norm.
        #[arg(long, default_value_t = 0.0)]
        s_norm: f64,
    },
    /// Deconvolution-order convergence sweep on the configured initial field.
    SweepN {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<u32>,
        #[arg(long, default_value_t = 0.0)]
        s_norm: f64,
    },
    /// Print |k| and the filter multipliers for the configured parameters.
    MultiplierTable {
        config: PathBuf,
        /// Also write the table to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Validate {
        /// Subset of criteria to run, e.g. `1,3,7`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
        #[arg(long, hide = true)]
        no_dealias: bool,
    },
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(leray_core::Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text).with_context(|| format!("in {}", path.display()))?)
}

fn write_sweep(cfg: &RunConfig, report: &SweepReport) -> anyhow::Result<bool> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(leray_core::Error::from)?;
    let path = dir.join("sweep.csv");
    write_atomic(&path, sweep_csv(report).as_bytes())?;
    for (p, e) in report.parameters.iter().zip(&report.errors) {
        println!("{p:>12.6e}  {e:.6e}");
    }
    match report.fitted {
        Some(f) => println!(
            "fitted {f:.6} target {:.6} tolerance {} -> {}",
            report.target,
            report.tolerance,
            if report.passed { "pass" } else { "FAIL" }
        ),
        None => println!("all errors vanish (exact) -> pass"),
    }
    println!("wrote {}", path.display());
    Ok(report.passed)
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let out = run_config(&cfg, Path::new("."))?;
            print!("{}", out.summary());
            println!(
                "wrote {} and {} in {}",
                ENERGY_FILE,
                SUMMARY_FILE,
                cfg.output_dir.display()
            );
            Ok(true)
        }
        Command::SweepAlpha {
            config,
            alphas,
            target_slope,
            s_norm,
        } => {
            let cfg = load(&config)?;
            let (state, _) = initial_state(&cfg, Path::new("."))?;
            let p = cfg.model.filter;
            let target = target_slope.unwrap_or(2.0 * p.theta);
            let report =
                alpha_sweep_with(&state.u, &p, &alphas, s_norm, target, ALPHA_SLOPE_TOLERANCE)?;
            write_sweep(&cfg, &report)
        }
        Command::SweepN {
            config,
            orders,
            s_norm,
        } => {
            let cfg = load(&config)?;
            let (state, _) = initial_state(&cfg, Path::new("."))?;
            let report = n_sweep(&state.u, &cfg.model.filter, &orders, s_norm)?;
            write_sweep(&cfg, &report)
        }
        Command::MultiplierTable { config, output } => {
            let cfg = load(&config)?;
            let grid = cfg.grid.build()?;
            let table = multiplier_table(&grid, &cfg.model.filter);
            print!("{table}");
            if let Some(path) = output {
                write_atomic(&path, table.as_bytes())?;
            }
            Ok(true)
        }
        Command::Validate {
            criteria,
            no_dealias,
        } => {
            let ids: Vec<usize> = if criteria.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                criteria
            };
            let opts = Options {
                disable_dealiasing: no_dealias,
            };
            let report = run_selected(&ids, opts, ids.len() == CRITERIA.len());
            print!("{}", report.table());
            for r in &report.results {
                eprintln!("criterion {:>2}: {:.1} s (limit {} s)", r.id, r.seconds, r.limit_seconds);
            }
            Ok(report.all_passed())
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LERAY_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| leray_core::Error::InvalidParameter(format!("LERAY_THREADS = `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| execute(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<leray_core::Error>())
                .map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
