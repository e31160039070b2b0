//! Integrating-factor time stepping.
//!
//! The viscous terms are advanced exactly through `exp(-nu |k|^2 dt)` per
//! mode; the projected nonlinear tendency is treated with explicit RK4
//! (Lawson form) or forward Euler.

use std::str::FromStr;
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};

use log::warn;

use crate::diagnostics::{energy_record, EnergyRecord};
use crate::dynamics::{rhs_with_gain, ModelConfig, SimState};
use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralVectorField};
use crate::grid::WaveGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    IfRk4,
    IfEuler,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::IfRk4 => "ifrk4",
            Scheme::IfEuler => "ifeuler",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ifrk4" => Ok(Scheme::IfRk4),
            "ifeuler" => Ok(Scheme::IfEuler),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub sample_every: usize,
    /// Advisory only: exceeding it logs a warning.
    pub cfl_limit: f64,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        StepperConfig {
            dt,
            t_end,
            scheme: Scheme::IfRk4,
            sample_every: 1,
            cfl_limit: 0.5,
        }
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::invalid(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every must be >= 1"));
        }
        Ok(())
    }

    /// Whole steps needed to go from `t0` to `t_end`.
    pub fn steps_from(&self, t0: f64) -> usize {
        ((self.t_end - t0) / self.dt).round().max(0.0) as usize
    }
}

/// Precomputed per-mode integrating factors for one `(grid, model, dt)`.
pub struct Integrator<'a> {
    grid: Arc<WaveGrid>,
    cfg: &'a ModelConfig,
    sc: &'a StepperConfig,
    half_u: Vec<f64>,
    full_u: Vec<f64>,
    half_b: Vec<f64>,
    full_b: Vec<f64>,
    gain: Option<Vec<f64>>,
    cfl_exceeded: AtomicUsize,
}

fn decay_factors(field: &SpectralVectorField, nu: f64, dt: f64) -> Vec<f64> {
    let g = field.grid();
    (0..g.len()).map(|s| (-nu * g.k2(s) * dt).exp()).collect()
}

impl<'a> Integrator<'a> {
    pub fn new(state: &SimState, cfg: &'a ModelConfig, sc: &'a StepperConfig) -> Result<Self> {
        sc.validate()?;
        cfg.validate(state.grid())?;
        state.validate(cfg)?;
        let (half_b, full_b) = match &state.b {
            Some(b) => {
                let nu2 = cfg.magnetic_diffusivity();
                (decay_factors(b, nu2, sc.dt / 2.0), decay_factors(b, nu2, sc.dt))
            }
            None => (Vec::new(), Vec::new()),
        };
        Ok(Integrator {
            grid: state.grid().clone(),
            cfg,
            sc,
            half_u: decay_factors(&state.u, cfg.nu, sc.dt / 2.0),
            full_u: decay_factors(&state.u, cfg.nu, sc.dt),
            half_b,
            full_b,
            gain: cfg.advecting_gain(state.grid()),
            cfl_exceeded: AtomicUsize::new(0),
        })
    }

    /// Number of steps so far whose CFL number exceeded the advisory limit.
    pub fn cfl_warnings(&self) -> usize {
        self.cfl_exceeded.load(Ordering::Relaxed)
    }

    fn tendencies(&self, u: &SpectralVectorField, b: Option<&SpectralVectorField>, t: f64) -> Result<Vec<SpectralVectorField>> {
        let state = SimState {
            t,
            u: u.clone(),
            b: b.cloned(),
        };
        let tend = rhs_with_gain(&state, self.cfg, self.gain.as_deref())?;
        let mut out = vec![tend.du];
        out.extend(tend.db);
        Ok(out)
    }

    fn factors(&self, i: usize, half: bool) -> &[f64] {
        match (i, half) {
            (0, true) => &self.half_u,
            (0, false) => &self.full_u,
            (_, true) => &self.half_b,
            (_, false) => &self.full_b,
        }
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        if !same_grid(state.grid(), &self.grid) {
            return Err(Error::GridMismatch);
        }
        let dt = self.sc.dt;
        let t = state.t;
        let fields: Vec<&SpectralVectorField> = state.fields().collect();
        let apply = |i: usize, half: bool, f: &SpectralVectorField| {
            let fac = self.factors(i, half);
            f.scaled_by(|s| fac[s])
        };
        let eval = |fs: &[SpectralVectorField], time: f64| self.tendencies(&fs[0], fs.get(1), time);

        let next: Vec<SpectralVectorField> = match self.sc.scheme {
            Scheme::IfEuler => {
                let k1 = eval(&fields.iter().map(|f| (*f).clone()).collect::<Vec<_>>(), t)?;
                fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| Ok(apply(i, false, &f.axpy(dt, &k1[i])?)))
                    .collect::<Result<_>>()?
            }
            Scheme::IfRk4 => {
                let y0: Vec<SpectralVectorField> = fields.iter().map(|f| (*f).clone()).collect();
                let k1 = eval(&y0, t)?;
                let y1: Vec<_> = (0..y0.len())
                    .map(|i| Ok(apply(i, true, &y0[i].axpy(dt / 2.0, &k1[i])?)))
                    .collect::<Result<_>>()?;
                let k2 = eval(&y1, t + dt / 2.0)?;
                let e_y0: Vec<_> = (0..y0.len()).map(|i| apply(i, true, &y0[i])).collect();
                let y2: Vec<_> = (0..y0.len())
                    .map(|i| e_y0[i].axpy(dt / 2.0, &k2[i]))
                    .collect::<Result<_>>()?;
                let k3 = eval(&y2, t + dt / 2.0)?;
                let y3: Vec<_> = (0..y0.len())
                    .map(|i| apply(i, false, &y0[i]).axpy(dt, &apply(i, true, &k3[i])))
                    .collect::<Result<_>>()?;
                let k4 = eval(&y3, t + dt)?;
                (0..y0.len())
                    .map(|i| {
                        let mid = k2[i].add(&k3[i])?;
                        let mut acc = apply(i, false, &k1[i]);
                        acc.add_assign_scaled(2.0, &apply(i, true, &mid));
                        acc.add_assign_scaled(1.0, &k4[i]);
                        apply(i, false, &y0[i]).axpy(dt / 6.0, &acc)
                    })
                    .collect::<Result<_>>()?
            }
        };
        let mut it = next.into_iter();
        let out = SimState {
            t: t + dt,
            u: it.next().unwrap(),
            b: it.next(),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite { t: out.t });
        }
        self.check_cfl(&out);
        Ok(out)
    }

    fn check_cfl(&self, state: &SimState) {
        let grid = state.grid();
        let umax = state.u.to_physical().max_abs();
        let cfl = umax * self.sc.dt / grid.spacing();
        if cfl > self.sc.cfl_limit {
            let prior = self.cfl_exceeded.fetch_add(1, Ordering::Relaxed);
            if prior == 0 {
                warn!(
                    "CFL number {cfl:.3} exceeds advisory limit {} at t = {}",
                    self.sc.cfl_limit, state.t
                );
            }
        }
    }

    /// Steps to `t_end`, calling `observe(step, state, record)` after every
    /// step (and once for the initial state). `record` is present on sample
    /// steps: step 0, every `sample_every` steps, and the final step.
    pub fn run_observed<F>(&self, initial: &SimState, mut observe: F) -> Result<SimState>
    where
        F: FnMut(usize, &SimState, Option<&EnergyRecord>) -> Result<()>,
    {
        let steps = self.sc.steps_from(initial.t);
        let rec = energy_record(initial, self.cfg);
        observe(0, initial, Some(&rec))?;
        let mut state = initial.clone();
        for i in 1..=steps {
            state = self.step(&state).map_err(|e| Error::AtTime {
                t: state.t,
                source: Box::new(e),
            })?;
            if i % self.sc.sample_every == 0 || i == steps {
                let rec = energy_record(&state, self.cfg);
                observe(i, &state, Some(&rec))?;
            } else {
                observe(i, &state, None)?;
            }
        }
        Ok(state)
    }
}

/// One time step of size `sc.dt`.
pub fn step(state: &SimState, cfg: &ModelConfig, sc: &StepperConfig) -> Result<SimState> {
    Integrator::new(state, cfg, sc)?.step(state)
}

/// Integrates to `sc.t_end`, handing every sample to `sink` in time order.
pub fn run<F>(initial: &SimState, cfg: &ModelConfig, sc: &StepperConfig, mut sink: F) -> Result<SimState>
where
    F: FnMut(&SimState, &EnergyRecord),
{
    let integ = Integrator::new(initial, cfg, sc)?;
    integ.run_observed(initial, |_, state, rec| {
        if let Some(r) = rec {
            sink(state, r);
        }
        Ok(())
    })
}
