//! The ten acceptance criteria, shared by the `acceptance` test target and
//! `leray validate`.
//!
//! Each criterion runs to completion and reports its measured quantities; a
//! failing check or an error never stops the remaining criteria. Elapsed time
//! is kept out of [`Report::table`] so repeated runs print identical tables.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::checkpoint::Checkpoint;
use crate::config::parse_config;
use crate::diagnostics::{
    alpha_sweep_with, energy_budget_residual, local_energy_residual, n_sweep, BumpTestFunction,
    EnergyRecord,
};
use crate::dynamics::{
    advect_with, rhs, total_pressure, Dealias, ForcingSpec, ModelConfig, ModelKind, SimState,
};
use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::filter::{deconvolve, filter_apply, van_cittert_series, FilterParams};
use crate::grid::WaveGrid;
use crate::runner::{checkpoint_name, run_config, FINAL_CHECKPOINT};
use crate::stepper::{Integrator, StepperConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Runs the skew-symmetry check without dealiasing. Criterion 3 is then
    /// expected to fail.
    pub disable_dealiasing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub results: Vec<CriterionResult>,
    /// Trajectory distance between Leray-alpha and Navier-Stokes as alpha
    /// shrinks; reported, with only monotone decrease asserted.
    pub alpha_limit: Option<(Vec<(f64, f64)>, bool)>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
            && self.alpha_limit.as_ref().map_or(true, |(_, ok)| *ok)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.line());
            out.push('\n');
        }
        if let Some((rows, ok)) = &self.alpha_limit {
            let cells: Vec<String> = rows
                .iter()
                .map(|(a, d)| format!("alpha {a}: {d:.3e}"))
                .collect();
            out.push_str(&format!(
                "{} alpha->0 trajectory distance to nse (monotone decrease only): {}\n",
                if *ok { "PASS" } else { "FAIL" },
                cells.join(", ")
            ));
        }
        out
    }
}

pub const CRITERIA: [(usize, &str, f64); 10] = [
    (1, "filter bound", 10.0),
    (2, "deconvolution operator norm", 10.0),
    (3, "advection oracle and skew symmetry", 30.0),
    (4, "taylor-green exactness", 20.0),
    (5, "energy budget", 60.0),
    (6, "local energy equality", 90.0),
    (7, "convergence sweeps", 10.0),
    (8, "model-family consistency", 60.0),
    (9, "mhd energy identity", 90.0),
    (10, "determinism and persistence", 30.0),
];

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail }
    }
}

/// Trajectory shared by criteria 5 and 6.
struct ForcedRun {
    cfg: ModelConfig,
    records: Vec<EnergyRecord>,
    checkpoints: Vec<SimState>,
    seconds: f64,
}

#[derive(Default)]
struct Context {
    forced: Option<Arc<ForcedRun>>,
}

/// Runs every criterion in order.
pub fn run_all(opts: Options) -> Report {
    run_selected(&CRITERIA.map(|c| c.0), opts, true)
}

/// Runs the listed criteria (`1..=10`), optionally followed by the
/// alpha-to-zero report.
pub fn run_selected(ids: &[usize], opts: Options, alpha_limit: bool) -> Report {
    let mut ctx = Context::default();
    let mut report = Report::default();
    for &(id, name, limit) in CRITERIA.iter().filter(|c| ids.contains(&c.0)) {
        let start = Instant::now();
        let (outcome, extra) = match run_criterion(id, opts, &mut ctx) {
            Ok(pair) => pair,
            Err(e) => (Outcome::new(false, format!("error: {e}")), 0.0),
        };
        let seconds = start.elapsed().as_secs_f64() + extra;
        let in_time = seconds < limit;
        let mut detail = outcome.detail;
        if !in_time {
            detail.push_str(&format!("; runtime {seconds:.1} s exceeds {limit} s"));
        }
        report.results.push(CriterionResult {
            id,
            name,
            passed: outcome.passed && in_time,
            detail,
            seconds,
            limit_seconds: limit,
        });
    }
    if alpha_limit {
        report.alpha_limit = Some(alpha_limit_distances().unwrap_or_else(|_| (Vec::new(), false)));
    }
    report
}

/// Outcome plus seconds spent earlier on shared work it reuses.
fn run_criterion(id: usize, opts: Options, ctx: &mut Context) -> Result<(Outcome, f64)> {
    let plain = |o: Result<Outcome>| o.map(|o| (o, 0.0));
    match id {
        1 => plain(filter_bound()),
        2 => plain(deconvolution_norm()),
        3 => plain(advection(opts)),
        4 => plain(taylor_green()),
        5 => {
            let run = forced_run(ctx)?;
            plain(energy_budget(&run))
        }
        6 => {
            let cached = ctx.forced.is_some();
            let run = forced_run(ctx)?;
            let extra = if cached { run.seconds } else { 0.0 };
            local_energy(&run).map(|o| (o, extra))
        }
        7 => plain(sweeps()),
        8 => plain(model_family()),
        9 => plain(mhd_identity()),
        10 => plain(persistence()),
        _ => Err(Error::invalid(format!("no criterion {id}"))),
    }
}

/// Hermitian, zero-mean, divergence-free field with Gaussian coefficients on
/// every retained mode (the full dealiased cube, not a sphere).
pub fn random_band_field(grid: &Arc<WaveGrid>, seed: u64) -> SpectralVectorField {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    for slot in 0..grid.len() {
        let m = grid.mirror(slot);
        if m <= slot || !grid.is_retained(slot) || grid.a2(slot) == 0 {
            continue;
        }
        let k = grid.wavevector(slot);
        let k2 = grid.k2(slot);
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let dot: Complex64 = v.iter().zip(&k).map(|(c, kj)| c * kj).sum();
        for (c, kj) in v.iter_mut().zip(&k) {
            *c -= dot * (kj / k2);
        }
        for j in 0..d {
            comps[j][slot] = v[j];
            comps[j][m] = v[j].conj();
        }
    }
    SpectralVectorField::from_components(grid, comps).expect("grid-sized components")
}

fn field_set() -> Result<Vec<SpectralVectorField>> {
    let mut out = Vec::with_capacity(200);
    for (dim, n) in [(3, 32), (2, 64)] {
        let grid = WaveGrid::new(dim, n, 2.0 * PI)?;
        for seed in 0..100u64 {
            let slope = -0.5 * (seed % 3) as f64;
            out.push(SpectralVectorField::random_solenoidal(
                &grid,
                seed + 1000 * dim as u64,
                slope,
                grid.dealias_cutoff() as u32,
            )?);
        }
    }
    Ok(out)
}

const THETAS: [f64; 3] = [0.25, 0.5, 1.0];
const S_VALUES: [f64; 3] = [-1.0, 0.0, 0.5];
const ALPHAS: [f64; 3] = [0.05, 0.2, 1.0];
/// Fields per grid used for the closed form vs series comparison.
const SERIES_FIELDS: usize = 20;

fn filter_bound() -> Result<Outcome> {
    let fields = field_set()?;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (i, u) in fields.iter().enumerate() {
        let alpha = ALPHAS[i % ALPHAS.len()];
        for theta in THETAS {
            let p = FilterParams::new(alpha, theta, 0)?;
            let bar = filter_apply(u, &p);
            for s in S_VALUES {
                let lhs = bar.sobolev_norm(s + 2.0 * theta);
                let rhs = alpha.powf(-2.0 * theta) * u.sobolev_norm(s);
                worst = worst.max(lhs / rhs);
                checks += 1;
            }
        }
    }
    Ok(Outcome::new(
        worst <= 1.0 + 1e-12,
        format!("max ||u_bar||_(s+2theta) / (alpha^-2theta ||u||_s) = {worst:.12} over {checks} cases (limit 1 + 1e-12)"),
    ))
}

fn deconvolution_norm() -> Result<Outcome> {
    let fields = field_set()?;
    let mut worst_norm: f64 = 0.0;
    let mut worst_series: f64 = 0.0;
    for (i, u) in fields.iter().enumerate() {
        let alpha = ALPHAS[i % ALPHAS.len()];
        for theta in THETAS {
            for n in [0u32, 1, 4, 16] {
                let h = deconvolve(u, &FilterParams::new(alpha, theta, n)?);
                for s in S_VALUES {
                    worst_norm = worst_norm.max(h.sobolev_norm(s) / u.sobolev_norm(s));
                }
            }
        }
        if i % 100 >= SERIES_FIELDS {
            continue;
        }
        let theta = THETAS[i % THETAS.len()];
        for n in 0..=8u32 {
            let p = FilterParams::new(alpha, theta, n)?;
            let closed = deconvolve(u, &p);
            let series = van_cittert_series(u, &p);
            let rel = closed.sub(&series)?.l2_norm() / series.l2_norm();
            worst_series = worst_series.max(rel);
        }
    }
    Ok(Outcome::new(
        worst_norm <= 1.0 + 1e-12 && worst_series <= 1e-12,
        format!(
            "max ||H_N u||_s / ||u||_s = {worst_norm:.12} (limit 1 + 1e-12); closed form vs series max rel diff {worst_series:.2e} over N <= 8 (limit 1e-12)"
        ),
    ))
}

/// `P_sigma` of the exact Galerkin product `sum_{p+q=k} (w_p . i q) v_q`
/// over retained modes, summed directly.
pub fn direct_advection(w: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    let grid = w.grid().clone();
    let d = grid.dim();
    let support: Vec<usize> = (0..grid.len()).filter(|&s| grid.is_retained(s)).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    for &p in &support {
        let a = grid.wave_index(p);
        let wp: Vec<Complex64> = (0..d).map(|j| w.component(j)[p]).collect();
        for &q in &support {
            let b = grid.wave_index(q);
            let mut sum = [0i32; 3];
            for j in 0..d {
                sum[j] = a[j] + b[j];
            }
            let Some(k) = grid.slot_of(sum).filter(|&s| grid.is_retained(s)) else {
                continue;
            };
            let kq = grid.wavevector(q);
            let w_dot_iq: Complex64 = (0..d).map(|j| wp[j] * Complex64::new(0.0, kq[j])).sum();
            for (c, oc) in out.iter_mut().enumerate() {
                oc[k] += w_dot_iq * v.component(c)[q];
            }
        }
    }
    Ok(SpectralVectorField::from_components(&grid, out)?.leray_project())
}

fn advection(opts: Options) -> Result<Outcome> {
    let mut oracle_err: f64 = 0.0;
    for (dim, n) in [(3, 8), (2, 16)] {
        let grid = WaveGrid::new(dim, n, 2.0 * PI)?;
        for seed in 0..3u64 {
            let w = random_band_field(&grid, 2 * seed + 1);
            let v = random_band_field(&grid, 2 * seed + 2);
            let fast = advect_with(&w, &v, Dealias::TwoThirds)?;
            let slow = direct_advection(&w, &v)?;
            oracle_err = oracle_err.max(fast.sub(&slow)?.max_abs() / slow.max_abs());
        }
    }
    let (grid, dealias) = if opts.disable_dealiasing {
        (WaveGrid::with_dealias_fraction(3, 32, 2.0 * PI, 1.0)?, Dealias::Off)
    } else {
        (WaveGrid::new(3, 32, 2.0 * PI)?, Dealias::TwoThirds)
    };
    let mut skew: f64 = 0.0;
    for seed in 0..3u64 {
        let w = random_band_field(&grid, 100 + seed);
        let v = random_band_field(&grid, 200 + seed);
        let b = advect_with(&w, &v, dealias)?;
        skew = skew.max(b.inner(&v)?.abs() / (b.l2_norm() * v.l2_norm()));
    }
    Ok(Outcome::new(
        oracle_err <= 1e-12 && skew <= 1e-11,
        format!(
            "max rel diff vs direct convolution {oracle_err:.2e} (limit 1e-12); |(B(w,v),v)| / (|B| |v|) = {skew:.2e} (limit 1e-11){}",
            if opts.disable_dealiasing { " [dealiasing disabled]" } else { "" }
        ),
    ))
}

fn taylor_green() -> Result<Outcome> {
    let grid = WaveGrid::new(2, 64, 2.0 * PI)?;
    let nu = 0.01;
    let sc = StepperConfig::new(1e-3, 1.0);
    let cases = [
        ("nse", ModelConfig::nse(nu)),
        ("leray-alpha 0", ModelConfig::new(ModelKind::LerayAlpha, nu, FilterParams::new(0.0, 0.25, 0)?)),
        ("leray-alpha 0.5", ModelConfig::new(ModelKind::LerayAlpha, nu, FilterParams::new(0.5, 0.25, 0)?)),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, cfg) in cases {
        let initial = SimState::new(0.0, SpectralVectorField::taylor_green(&grid, 1.0));
        let fin = Integrator::new(&initial, &cfg, &sc)?.run_observed(&initial, |_, _, _| Ok(()))?;
        let exact = SpectralVectorField::taylor_green(&grid, (-2.0 * nu * fin.t).exp());
        let err = fin.u.sub(&exact)?.to_physical().max_abs();
        ok &= err < 1e-10;
        parts.push(format!("{name} {err:.2e}"));
    }
    Ok(Outcome::new(
        ok,
        format!("max pointwise error at t = 1: {} (limit 1e-10)", parts.join(", ")),
    ))
}

const FORCED_NU: f64 = 0.05;
const FORCED_STEPS: usize = 200;
const FORCED_DT: f64 = 1e-3;
const FORCED_CHECKPOINT_EVERY: usize = 5;

fn forced_setup() -> Result<(ModelConfig, SimState)> {
    let grid = WaveGrid::new(3, 32, 2.0 * PI)?;
    let cfg = ModelConfig::new(ModelKind::LerayAlpha, FORCED_NU, FilterParams::new(0.1, 0.25, 0)?)
        .with_forcing(ForcingSpec::abc(1.0, 1.0, 1.0, FORCED_NU));
    let abc = ForcingSpec::abc(1.0, 1.0, 1.0, 1.0)
        .evaluate(&grid, 0.0)
        .expect("nonzero abc field");
    let pert = SpectralVectorField::random_solenoidal(&grid, 7, -1.0, 6)?;
    let u0 = abc.axpy(0.05 / pert.l2_norm(), &pert)?;
    Ok((cfg, SimState::new(0.0, u0)))
}

fn trajectory(
    cfg: &ModelConfig,
    initial: &SimState,
    dt: f64,
    steps: usize,
    keep_every: usize,
) -> Result<(Vec<EnergyRecord>, Vec<SimState>)> {
    let sc = StepperConfig::new(dt, dt * steps as f64);
    let mut records = Vec::new();
    let mut states = Vec::new();
    Integrator::new(initial, cfg, &sc)?.run_observed(initial, |i, s, r| {
        if let Some(r) = r {
            records.push(r.clone());
        }
        if keep_every > 0 && i % keep_every == 0 {
            states.push(s.clone());
        }
        Ok(())
    })?;
    Ok((records, states))
}

fn forced_run(ctx: &mut Context) -> Result<Arc<ForcedRun>> {
    if let Some(run) = &ctx.forced {
        return Ok(run.clone());
    }
    let start = Instant::now();
    let (cfg, initial) = forced_setup()?;
    let (records, checkpoints) =
        trajectory(&cfg, &initial, FORCED_DT, FORCED_STEPS, FORCED_CHECKPOINT_EVERY)?;
    let run = Arc::new(ForcedRun {
        cfg,
        records,
        checkpoints,
        seconds: start.elapsed().as_secs_f64(),
    });
    ctx.forced = Some(run.clone());
    Ok(run)
}

fn energy_budget(run: &ForcedRun) -> Result<Outcome> {
    let coarse = energy_budget_residual(&run.records, &run.cfg)?;
    let (_, initial) = forced_setup()?;
    let (fine_records, _) = trajectory(&run.cfg, &initial, FORCED_DT / 2.0, 2 * FORCED_STEPS, 0)?;
    let fine = energy_budget_residual(&fine_records, &run.cfg)?;
    let factor = coarse / fine;
    Ok(Outcome::new(
        coarse < 1e-4 && (3.0..=5.0).contains(&factor),
        format!(
            "residual {coarse:.3e} at dt 1e-3 (limit 1e-4), {fine:.3e} at dt 5e-4, factor {factor:.3} (window [3, 5])"
        ),
    ))
}

fn local_energy(run: &ForcedRun) -> Result<Outcome> {
    let grid = run.checkpoints[0].grid().clone();
    let horizon = run.checkpoints.last().expect("checkpoints").t;
    let phi = BumpTestFunction::canonical(&grid, horizon);
    let pressures: Vec<SpectralScalarField> = run
        .checkpoints
        .iter()
        .map(|s| total_pressure(s, &run.cfg))
        .collect::<Result<_>>()?;
    let at = |stride: usize| -> Result<f64> {
        let c: Vec<SimState> = run.checkpoints.iter().step_by(stride).cloned().collect();
        let p: Vec<SpectralScalarField> = pressures.iter().step_by(stride).cloned().collect();
        local_energy_residual(&c, &p, &phi, &run.cfg)
    };
    let coarse = at(10 / FORCED_CHECKPOINT_EVERY)?;
    let fine = at(1)?;
    let factor = coarse.abs() / fine.abs();
    Ok(Outcome::new(
        coarse.abs() < 1e-3 && (2.0..=6.0).contains(&factor),
        format!(
            "residual {coarse:.3e} with checkpoints every 10 steps (limit 1e-3), {fine:.3e} every 5, factor {factor:.3} (window [2, 6])"
        ),
    ))
}

fn sweeps() -> Result<Outcome> {
    let alphas = [1e-4, 5e-5, 2.5e-5];
    let mut ok = true;
    let mut parts = Vec::new();
    for (dim, n) in [(3, 32), (2, 64)] {
        let grid = WaveGrid::new(dim, n, 2.0 * PI)?;
        let u = SpectralVectorField::random_solenoidal(&grid, 31, -1.0, grid.dealias_cutoff() as u32)?;
        for theta in [0.25, 0.5] {
            let p = FilterParams::new(0.0, theta, 0)?;
            let r = alpha_sweep_with(&u, &p, &alphas, 0.0, 2.0 * theta, 0.05)?;
            ok &= r.passed;
            parts.push(format!(
                "{dim}d theta {theta} slope {:.4}",
                r.fitted.unwrap_or(f64::NAN)
            ));
        }
    }
    let grid = WaveGrid::new(3, 32, 2.0 * PI)?;
    let u = SpectralVectorField::random_solenoidal(&grid, 32, -1.0, 10)?;
    let p = FilterParams::new(0.1, 0.25, 0)?;
    let orders: Vec<u32> = (0..=24).collect();
    // Decay is bounded by the top shell's ratio; a field spread
    // over many shells decays slightly faster than that.
    let band = n_sweep(&u, &p, &orders, 0.0)?;
    let top = (0..grid.len())
        .filter(|&s| u.components().iter().any(|c| c[s].norm_sqr() > 0.0))
        .map(|s| grid.a2(s))
        .max()
        .unwrap_or(0);
    let shell = u.scaled_by(|s| if grid.a2(s) == top { 1.0 } else { 0.0 });
    let single = n_sweep(&shell, &p, &orders, 0.0)?;
    for (name, r, two_sided) in [("band", &band, false), ("top shell", &single, true)] {
        let ratio = r.fitted.unwrap_or(f64::NAN);
        let rel = ratio / r.target - 1.0;
        ok &= r.passed && rel <= 0.02 && (!two_sided || rel.abs() <= 0.02);
        parts.push(format!(
            "{name} order ratio {ratio:.4} vs x_max/(1+x_max) = {:.4} ({:+.2}%)",
            r.target,
            100.0 * rel
        ));
    }
    Ok(Outcome::new(ok, format!(
            "{} (slope window 2 theta +- 0.05; ratio at most 2% above the bound, and within 2% for one shell)",
            parts.join(", ")
        )))
}

fn relative_distance(a: &SimState, b: &SimState) -> Result<f64> {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (x, y) in a.fields().zip(b.fields()) {
        num = num.max(x.sub(y)?.max_abs());
        den = den.max(y.max_abs());
    }
    Ok(if den == 0.0 { num } else { num / den })
}

/// Steps two models side by side and returns the largest relative distance.
fn lockstep(a: &ModelConfig, b: &ModelConfig, initial: &SimState, sc: &StepperConfig) -> Result<f64> {
    let ia = Integrator::new(initial, a, sc)?;
    let ib = Integrator::new(initial, b, sc)?;
    let (mut sa, mut sb) = (initial.clone(), initial.clone());
    let mut worst: f64 = 0.0;
    for _ in 0..sc.steps_from(initial.t) {
        sa = ia.step(&sa)?;
        sb = ib.step(&sb)?;
        worst = worst.max(relative_distance(&sa, &sb)?);
    }
    Ok(worst)
}

fn model_family() -> Result<Outcome> {
    let grid = WaveGrid::new(3, 32, 2.0 * PI)?;
    let u = SpectralVectorField::random_solenoidal(&grid, 41, -1.0, 8)?;
    let initial = SimState::new(0.0, u.scale(1.0 / u.l2_norm()));
    let sc = StepperConfig::new(1e-3, 0.1);
    let nu = 0.02;
    let forcing = ForcingSpec::abc(1.0, 1.0, 1.0, 0.1);
    let p = FilterParams::new(0.1, 0.25, 0)?;
    let alpha = ModelConfig::new(ModelKind::LerayAlpha, nu, p).with_forcing(forcing.clone());
    let deconv = ModelConfig::new(ModelKind::LerayDeconv, nu, p).with_forcing(forcing.clone());
    let d1 = lockstep(&deconv, &alpha, &initial, &sc)?;
    let alpha0 = ModelConfig::new(ModelKind::LerayAlpha, nu, p.with_alpha(0.0)).with_forcing(forcing.clone());
    let nse = ModelConfig::nse(nu).with_forcing(forcing);
    let d2 = lockstep(&alpha0, &nse, &initial, &sc)?;
    Ok(Outcome::new(
        d1 <= 1e-13 && d2 <= 1e-13,
        format!(
            "100 steps: deconv N=0 vs leray-alpha {d1:.2e}, leray-alpha alpha=0 vs nse {d2:.2e} (limit 1e-13)"
        ),
    ))
}

/// Final-state distance between Leray-alpha and Navier-Stokes for shrinking
/// alpha, and whether it decreases monotonically.
pub fn alpha_limit_distances() -> Result<(Vec<(f64, f64)>, bool)> {
    let grid = WaveGrid::new(3, 16, 2.0 * PI)?;
    let u = SpectralVectorField::random_solenoidal(&grid, 51, -1.0, 4)?;
    let initial = SimState::new(0.0, u.scale(1.0 / u.l2_norm()));
    let sc = StepperConfig::new(2e-3, 0.2);
    let nu = 0.02;
    let fin = |cfg: &ModelConfig| -> Result<SimState> {
        Integrator::new(&initial, cfg, &sc)?.run_observed(&initial, |_, _, _| Ok(()))
    };
    let reference = fin(&ModelConfig::nse(nu))?;
    let mut rows = Vec::new();
    for alpha in [0.4, 0.2, 0.1, 0.05] {
        let cfg = ModelConfig::new(ModelKind::LerayAlpha, nu, FilterParams::new(alpha, 0.25, 0)?);
        rows.push((alpha, relative_distance(&fin(&cfg)?, &reference)?));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 < w[0].1);
    Ok((rows, monotone))
}

fn mhd_setup() -> Result<(ModelConfig, SimState)> {
    let grid = WaveGrid::new(3, 32, 2.0 * PI)?;
    let cfg = ModelConfig::mhd(0.02, 0.02, FilterParams::new(0.1, 0.25, 2)?);
    let u = SpectralVectorField::random_solenoidal(&grid, 61, -1.0, 6)?;
    let b = SpectralVectorField::random_solenoidal(&grid, 62, -1.0, 6)?;
    let u = u.scale(1.0 / u.l2_norm());
    let b = b.scale(1.0 / b.l2_norm());
    Ok((cfg, SimState::with_magnetic(0.0, u, b)))
}

fn mhd_identity() -> Result<Outcome> {
    let (cfg, initial) = mhd_setup()?;
    let (coarse_rec, _) = trajectory(&cfg, &initial, 1e-3, 100, 0)?;
    let (fine_rec, _) = trajectory(&cfg, &initial, 5e-4, 200, 0)?;
    let coarse = energy_budget_residual(&coarse_rec, &cfg)?;
    let fine = energy_budget_residual(&fine_rec, &cfg)?;
    let factor = coarse / fine;

    let grid = initial.grid().clone();
    let mut cancel: f64 = 0.0;
    for seed in 0..3u64 {
        let u = random_band_field(&grid, 300 + seed);
        let b = random_band_field(&grid, 400 + seed);
        let state = SimState::with_magnetic(0.0, u, b);
        let t = rhs(&state, &cfg)?;
        let db = t.db.as_ref().ok_or(Error::MissingMagneticField)?;
        let b = state.b.as_ref().expect("magnetic field");
        let exchange = t.du.inner(&state.u)? + db.inner(b)?;
        let scale = t.du.l2_norm() * state.u.l2_norm() + db.l2_norm() * b.l2_norm();
        cancel = cancel.max(exchange.abs() / scale);
    }
    Ok(Outcome::new(
        coarse < 1e-4 && (3.0..=5.0).contains(&factor) && cancel <= 1e-11,
        format!(
            "budget residual {coarse:.3e} at dt 1e-3 (limit 1e-4), {fine:.3e} at dt 5e-4, factor {factor:.3} (window [3, 5]); nonlinear exchange {cancel:.2e} (limit 1e-11)"
        ),
    ))
}

const PERSISTENCE_CONFIG: &str = "\
[grid]
dim = 3
n = 16
[model]
kind = leray-deconv
nu = 0.02
alpha = 0.2
theta = 0.25
n_deconv = 2
[forcing]
kind = abc
amplitude = 0.1
[stepper]
dt = 0.002
t_end = 0.12
sample_every = 2
[initial]
kind = random
seed = 71
slope = -1
cutoff = 4
energy = 0.5
[output]
dir = out
checkpoint_every = 30
";

static SCRATCH: AtomicUsize = AtomicUsize::new(0);

struct Scratch(PathBuf);

impl Scratch {
    fn new() -> Result<Self> {
        let dir = std::env::temp_dir().join(format!(
            "leray-validate-{}-{}",
            std::process::id(),
            SCRATCH.fetch_add(1, Ordering::Relaxed)
        ));
        fs::create_dir_all(&dir)?;
        Ok(Scratch(dir))
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn outputs(dir: &Path) -> Result<Vec<Vec<u8>>> {
    ["energy.csv", "summary.txt", FINAL_CHECKPOINT, &checkpoint_name(30)]
        .iter()
        .map(|f| Ok(fs::read(dir.join("out").join(f))?))
        .collect()
}

fn persistence() -> Result<Outcome> {
    let cfg = parse_config(PERSISTENCE_CONFIG)?;
    let runs = [Scratch::new()?, Scratch::new()?, Scratch::new()?];
    run_config(&cfg, &runs[0].0)?;
    run_config(&cfg, &runs[1].0)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?
        .install(|| run_config(&cfg, &runs[2].0))?;
    let first = outputs(&runs[0].0)?;
    let identical = first == outputs(&runs[1].0)? && first == outputs(&runs[2].0)?;

    let resume_dir = Scratch::new()?;
    let resumed_cfg = parse_config(&PERSISTENCE_CONFIG.replace(
        "kind = random\nseed = 71\nslope = -1\ncutoff = 4\nenergy = 0.5",
        &format!(
            "kind = checkpoint\npath = {}",
            runs[0].0.join("out").join(checkpoint_name(30)).display()
        ),
    ))?;
    let resumed = run_config(&resumed_cfg, &resume_dir.0)?;
    let full = Checkpoint::load(&runs[0].0.join("out").join(FINAL_CHECKPOINT))?;
    let state_diff = relative_distance(&resumed.final_state, &full.state)?;
    let full_csv = fs::read_to_string(runs[0].0.join("out/energy.csv"))?;
    let resumed_csv = fs::read_to_string(resume_dir.0.join("out/energy.csv"))?;
    let rows_match = full_csv.lines().skip(1).filter(|l| resumed_csv.contains(*l)).count();
    let resumed_rows = resumed_csv.lines().count() - 1;
    let ok = identical && state_diff <= 1e-13 && rows_match == resumed_rows;
    Ok(Outcome::new(
        ok,
        format!(
            "repeated runs byte-identical (1 pool vs 3 threads): {}; resume from step 30: final state rel diff {state_diff:.2e} (limit 1e-13), {rows_match}/{resumed_rows} energy rows identical",
            if identical { "yes" } else { "no" }
        ),
    ))
}
