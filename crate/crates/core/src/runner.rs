//! Executes a [`RunConfig`]: builds the initial state, steps it, and writes
//! `energy.csv`, `summary.txt` and checkpoints into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use log::info;

use crate::checkpoint::Checkpoint;
use crate::config::{InitialCondition, RunConfig};
use crate::diagnostics::{energy_budget_residual, energy_record, EnergyRecord};
use crate::dynamics::{ForcingSpec, SimState};
use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralVectorField};
use crate::grid::WaveGrid;
use crate::output::{energy_csv, write_atomic};
use crate::stepper::Integrator;

pub const ENERGY_FILE: &str = "energy.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const FINAL_CHECKPOINT: &str = "final.chk";

pub fn checkpoint_name(step: u64) -> String {
    format!("step_{step:08}.chk")
}

/// Field for a non-checkpoint initial condition.
pub fn preset_field(ic: &InitialCondition, grid: &Arc<WaveGrid>) -> Result<SpectralVectorField> {
    match ic {
        InitialCondition::TaylorGreen { amplitude } => {
            Ok(SpectralVectorField::taylor_green(grid, *amplitude))
        }
        InitialCondition::Abc { amplitude } => ForcingSpec::abc(1.0, 1.0, 1.0, *amplitude)
            .evaluate(grid, 0.0)
            .ok_or_else(|| Error::invalid("empty abc field")),
        InitialCondition::Random {
            seed,
            slope,
            cutoff,
            energy,
        } => {
            let u = SpectralVectorField::random_solenoidal(grid, *seed, *slope, *cutoff)?;
            Ok(match energy {
                Some(e) => {
                    let current = 0.5 * u.l2_norm().powi(2);
                    u.scale((e / current).sqrt())
                }
                None => u,
            })
        }
        InitialCondition::Zero => Ok(SpectralVectorField::zeros(grid)),
        InitialCondition::Checkpoint { .. } => Err(Error::invalid(
            "checkpoint initial conditions are loaded, not generated",
        )),
    }
}

/// Initial state and the step count it corresponds to.
pub fn initial_state(cfg: &RunConfig, base: &Path) -> Result<(SimState, u64)> {
    let grid = cfg.grid.build()?;
    if let InitialCondition::Checkpoint { path } = &cfg.initial {
        let ck = Checkpoint::load(&base.join(path))?;
        if !same_grid(ck.state.grid(), &grid) {
            return Err(Error::GridMismatch);
        }
        if !ck.model.matches(&cfg.model) {
            return Err(Error::Checkpoint(
                "checkpoint model parameters differ from the configuration".into(),
            ));
        }
        return Ok((ck.state, ck.step));
    }
    let u = preset_field(&cfg.initial, &grid)?;
    let b = cfg
        .magnetic
        .as_ref()
        .map(|ic| preset_field(ic, &grid))
        .transpose()?;
    Ok((SimState { t: 0.0, u, b }, 0))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<EnergyRecord>,
    pub final_state: SimState,
    pub first_step: u64,
    pub last_step: u64,
    /// `None` when fewer than three evenly spaced samples exist.
    pub budget_residual: Option<f64>,
    pub cfl_warnings: usize,
}

impl RunOutcome {
    pub fn summary(&self) -> String {
        let last = self.records.last().expect("at least one sample");
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("first_step", self.first_step.to_string());
        line("last_step", self.last_step.to_string());
        line("t", format!("{:.16e}", self.final_state.t));
        line("e_kin", format!("{:.16e}", last.e_kin));
        line("e_mag", format!("{:.16e}", last.e_mag));
        line("grad_u", format!("{:.16e}", last.grad_u));
        line("grad_b", format!("{:.16e}", last.grad_b));
        line("h_half", format!("{:.16e}", last.h_half));
        line("div_residual", format!("{:.16e}", last.div_residual));
        line(
            "budget_residual",
            self.budget_residual
                .map(|r| format!("{r:.16e}"))
                .unwrap_or_else(|| "n/a".into()),
        );
        line("cfl_warnings", self.cfl_warnings.to_string());
        out
    }
}

/// Runs without touching the file system.
pub fn simulate(cfg: &RunConfig, base: &Path) -> Result<RunOutcome> {
    execute(cfg, base, None)
}

/// Runs and writes every output into `base/cfg.output_dir`.
pub fn run_config(cfg: &RunConfig, base: &Path) -> Result<RunOutcome> {
    let dir = base.join(&cfg.output_dir);
    fs::create_dir_all(&dir)?;
    let outcome = execute(cfg, base, Some(&dir))?;
    write_atomic(&dir.join(ENERGY_FILE), energy_csv(&outcome.records).as_bytes())?;
    write_atomic(&dir.join(SUMMARY_FILE), outcome.summary().as_bytes())?;
    Ok(outcome)
}

fn execute(cfg: &RunConfig, base: &Path, dir: Option<&Path>) -> Result<RunOutcome> {
    let (initial, first_step) = initial_state(cfg, base)?;
    initial.validate(&cfg.model)?;
    let sc = &cfg.stepper;
    let integ = Integrator::new(&initial, &cfg.model, sc)?;
    let every = sc.sample_every as u64;
    let total = first_step + sc.steps_from(initial.t) as u64;
    info!(
        "running {} from step {first_step} to {total} (t = {} to {})",
        cfg.model.kind, initial.t, sc.t_end
    );
    let mut records = Vec::new();
    let mut aligned = Vec::new();
    let final_state = integ.run_observed(&initial, |i, state, _| {
        let step = first_step + i as u64;
        let on_grid = step % every == 0;
        if on_grid || i == 0 || step == total {
            let rec = energy_record(state, &cfg.model);
            if on_grid {
                aligned.push(rec.clone());
            }
            records.push(rec);
        }
        if let Some(dir) = dir {
            if cfg.checkpoint_every > 0 && i > 0 && step % cfg.checkpoint_every as u64 == 0 {
                Checkpoint::new(state.clone(), &cfg.model, step).save(&dir.join(checkpoint_name(step)))?;
            }
        }
        Ok(())
    })?;
    if let Some(dir) = dir {
        Checkpoint::new(final_state.clone(), &cfg.model, total).save(&dir.join(FINAL_CHECKPOINT))?;
    }
    let budget_residual = if aligned.len() >= 3 {
        Some(energy_budget_residual(&aligned, &cfg.model)?)
    } else {
        None
    };
    Ok(RunOutcome {
        records,
        final_state,
        first_step,
        last_step: total,
        budget_residual,
        cfl_warnings: integ.cfl_warnings(),
    })
}
