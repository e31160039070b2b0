//! Python bindings: grids, spectral fields, filters, model runs and the
//! acceptance suite.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use leray_core::diagnostics::{alpha_sweep, n_sweep, shell_spectrum};
use leray_core::filter::{filter_gain, van_cittert_series};
use leray_core::validation::{run_selected, Options, CRITERIA};
use leray_core::{
    advect, deconvolution_gain, deconvolve, energy_budget_residual, filter_apply, helmholtz_multiplier,
    parse_config, run, run_config, EnergyRecord, FilterParams as CoreFilter, ModelConfig, ModelKind,
    SimState, SpectralVectorField, StepperConfig, SweepReport, WaveGrid,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: leray_core::Error) -> PyErr {
    use leray_core::Error as E;
    match e {
        E::Io(_) | E::Checkpoint(_) => PyOSError::new_err(e.to_string()),
        E::Syntax { .. }
        | E::UnknownKey { .. }
        | E::InvariantViolation { .. }
        | E::InvalidParameter(_)
        | E::CriticalityViolation { .. }
        | E::GridMismatch
        | E::MissingMagneticField
        | E::UnsupportedModel(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for leray_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Periodic grid of `n` points per axis on `[0, length)^dim`.
#[pyclass(frozen, module = "leray")]
struct Grid {
    inner: Arc<WaveGrid>,
}

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (dim, n, length = 2.0 * PI, dealias = 2.0 / 3.0))]
    fn new(dim: usize, n: usize, length: f64, dealias: f64) -> PyResult<Self> {
        Ok(Grid {
            inner: WaveGrid::with_dealias_fraction(dim, n, length, dealias).py()?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn dealias_cutoff(&self) -> usize {
        self.inner.dealias_cutoff()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dim={}, n={}, length={}, cutoff={})",
            self.inner.dim(),
            self.inner.n(),
            self.inner.length(),
            self.inner.dealias_cutoff()
        )
    }
}

/// Filter width `alpha`, exponent `theta` and deconvolution order.
#[pyclass(frozen, module = "leray")]
struct FilterParams {
    inner: CoreFilter,
}

#[pymethods]
impl FilterParams {
    #[new]
    #[pyo3(signature = (alpha, theta = 0.25, n_deconv = 0))]
    fn new(alpha: f64, theta: f64, n_deconv: u32) -> PyResult<Self> {
        Ok(FilterParams {
            inner: CoreFilter::new(alpha, theta, n_deconv).py()?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn n_deconv(&self) -> u32 {
        self.inner.n_deconv
    }

    /// `1 + (alpha k)^{2 theta}`
    fn helmholtz_multiplier(&self, k: f64) -> f64 {
        helmholtz_multiplier(k, &self.inner)
    }

    fn filter_gain(&self, k: f64) -> f64 {
        filter_gain(k, &self.inner)
    }

    fn deconvolution_gain(&self, k: f64) -> f64 {
        deconvolution_gain(k, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "FilterParams(alpha={}, theta={}, n_deconv={})",
            self.inner.alpha, self.inner.theta, self.inner.n_deconv
        )
    }
}

/// Vector field stored as Fourier coefficients.
#[pyclass(frozen, module = "leray")]
struct Field {
    inner: SpectralVectorField,
}

fn wrap(inner: SpectralVectorField) -> Field {
    Field { inner }
}

fn index3(a: Vec<i32>) -> PyResult<[i32; 3]> {
    match a.as_slice() {
        [x, y] => Ok([*x, *y, 0]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(PyValueError::new_err("wave index needs 2 or 3 entries")),
    }
}

#[pymethods]
impl Field {
    #[staticmethod]
    fn zeros(grid: &Grid) -> Field {
        wrap(SpectralVectorField::zeros(&grid.inner))
    }

    /// Divergence-free random field with `|u_k| = |k|^slope` up to `cutoff`.
    #[staticmethod]
    fn random_solenoidal(grid: &Grid, seed: u64, slope: f64, cutoff: u32) -> PyResult<Field> {
        Ok(wrap(SpectralVectorField::random_solenoidal(&grid.inner, seed, slope, cutoff).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (grid, amplitude = 1.0))]
    fn taylor_green(grid: &Grid, amplitude: f64) -> Field {
        wrap(SpectralVectorField::taylor_green(&grid.inner, amplitude))
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid {
            inner: self.inner.grid().clone(),
        }
    }

    #[getter]
    fn ncomp(&self) -> usize {
        self.inner.ncomp()
    }

    fn mode(&self, index: Vec<i32>) -> PyResult<Option<Vec<Complex64>>> {
        Ok(self.inner.mode(index3(index)?))
    }

    /// Copy with the coefficient at `index` replaced. The caller keeps the
    /// conjugate partner consistent.
    fn with_mode(&self, index: Vec<i32>, value: Vec<Complex64>) -> PyResult<Field> {
        let mut out = self.inner.clone();
        out.set_mode(index3(index)?, &value).py()?;
        Ok(wrap(out))
    }

    fn sobolev_norm(&self, s: f64) -> f64 {
        self.inner.sobolev_norm(s)
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    fn inner_product(&self, other: &Field) -> PyResult<f64> {
        self.inner.inner(&other.inner).py()
    }

    fn divergence_residual(&self) -> f64 {
        self.inner.divergence_residual()
    }

    fn hermitian_residue(&self) -> f64 {
        self.inner.hermitian_residue()
    }

    fn leray_project(&self) -> Field {
        wrap(self.inner.leray_project())
    }

    fn fractional_laplacian(&self, theta: f64) -> Field {
        wrap(self.inner.fractional_laplacian(theta))
    }

    fn galerkin_project(&self, m: u32) -> PyResult<Field> {
        Ok(wrap(self.inner.galerkin_project(m).py()?))
    }

    fn filter(&self, p: &FilterParams) -> Field {
        wrap(filter_apply(&self.inner, &p.inner))
    }

    fn deconvolve(&self, p: &FilterParams) -> Field {
        wrap(deconvolve(&self.inner, &p.inner))
    }

    fn van_cittert(&self, p: &FilterParams) -> Field {
        wrap(van_cittert_series(&self.inner, &p.inner))
    }

    /// Grid values, one flat row-major list per component.
    fn to_physical(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.inverse_transform().py()?.components().to_vec())
    }

    /// `(shell, energy, modes)` per integer shell.
    fn shell_spectrum(&self) -> Vec<(usize, f64, usize)> {
        shell_spectrum(&self.inner)
            .into_iter()
            .map(|s| (s.shell, s.energy, s.modes))
            .collect()
    }

    fn __add__(&self, other: &Field) -> PyResult<Field> {
        Ok(wrap(self.inner.add(&other.inner).py()?))
    }

    fn __sub__(&self, other: &Field) -> PyResult<Field> {
        Ok(wrap(self.inner.sub(&other.inner).py()?))
    }

    fn __mul__(&self, s: f64) -> Field {
        wrap(self.inner.scale(s))
    }

    fn __rmul__(&self, s: f64) -> Field {
        wrap(self.inner.scale(s))
    }

    fn __eq__(&self, other: &Field) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!(
            "Field(dim={}, n={}, l2={:.6e})",
            g.dim(),
            g.n(),
            self.inner.l2_norm()
        )
    }
}

/// `P_sigma (w . grad) v` with the 2/3 rule.
#[pyfunction]
fn advect_fields(w: &Field, v: &Field) -> PyResult<Field> {
    Ok(wrap(advect(&w.inner, &v.inner).py()?))
}

/// Model kind, viscosities and filter. Forcing is only available through
/// config files.
#[pyclass(frozen, module = "leray")]
struct Model {
    inner: ModelConfig,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (kind, nu, filter = None, nu2 = None, unsafe_subcritical = false))]
    fn new(
        kind: &str,
        nu: f64,
        filter: Option<&FilterParams>,
        nu2: Option<f64>,
        unsafe_subcritical: bool,
    ) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().py()?;
        let mut cfg = ModelConfig::new(kind, nu, filter.map(|f| f.inner).unwrap_or_default());
        cfg.nu2 = nu2;
        cfg.unsafe_subcritical = unsafe_subcritical;
        cfg.check_criticality().py()?;
        Ok(Model { inner: cfg })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    /// Momentum and induction tendencies (without viscosity) at `u`, `b`.
    #[pyo3(signature = (u, b = None))]
    fn tendency(&self, u: &Field, b: Option<&Field>) -> PyResult<(Field, Option<Field>)> {
        let state = state_of(u, b);
        let t = leray_core::rhs(&state, &self.inner).py()?;
        Ok((wrap(t.du), t.db.map(wrap)))
    }

    fn __repr__(&self) -> String {
        format!("Model({}, nu={})", self.inner.kind, self.inner.nu)
    }
}

fn state_of(u: &Field, b: Option<&Field>) -> SimState {
    match b {
        Some(b) => SimState::with_magnetic(0.0, u.inner.clone(), b.inner.clone()),
        None => SimState::new(0.0, u.inner.clone()),
    }
}

fn record_dict<'py>(py: Python<'py>, r: &EnergyRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("e_kin", r.e_kin)?;
    d.set_item("e_mag", r.e_mag)?;
    d.set_item("grad_u", r.grad_u)?;
    d.set_item("grad_b", r.grad_b)?;
    d.set_item("inject", r.inject)?;
    d.set_item("h_half", r.h_half)?;
    d.set_item("div_residual", r.div_residual)?;
    Ok(d)
}

/// Integrates from `t = 0` to `t_end` with the IF-RK4 scheme. Returns the
/// final `u`, the final `b` (or None) and the sampled energy records.
#[pyfunction]
#[pyo3(signature = (model, u, dt, t_end, b = None, sample_every = 1))]
fn simulate<'py>(
    py: Python<'py>,
    model: &Model,
    u: &Field,
    dt: f64,
    t_end: f64,
    b: Option<&Field>,
    sample_every: usize,
) -> PyResult<(Field, Option<Field>, Vec<Bound<'py, PyDict>>)> {
    let state = state_of(u, b);
    let sc = StepperConfig::new(dt, t_end).with_sample_every(sample_every);
    let cfg = &model.inner;
    let (last, records) = py
        .detach(|| {
            let mut records = Vec::new();
            run(&state, cfg, &sc, |_, r| records.push(r.clone())).map(|s| (s, records))
        })
        .py()?;
    let dicts = records
        .iter()
        .map(|r| record_dict(py, r))
        .collect::<PyResult<_>>()?;
    Ok((wrap(last.u), last.b.map(wrap), dicts))
}

/// Largest relative residual of the energy identity over the records
/// returned by [`simulate`].
#[pyfunction]
fn budget_residual(model: &Model, records: Vec<Bound<'_, PyDict>>) -> PyResult<f64> {
    let get = |d: &Bound<'_, PyDict>, k: &str| -> PyResult<f64> {
        d.get_item(k)?
            .ok_or_else(|| PyValueError::new_err(format!("record lacks `{k}`")))?
            .extract()
    };
    let recs = records
        .iter()
        .map(|d| {
            Ok(EnergyRecord {
                t: get(d, "t")?,
                e_kin: get(d, "e_kin")?,
                e_mag: get(d, "e_mag")?,
                grad_u: get(d, "grad_u")?,
                grad_b: get(d, "grad_b")?,
                inject: get(d, "inject")?,
                h_half: get(d, "h_half")?,
                div_residual: get(d, "div_residual")?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    energy_budget_residual(&recs, &model.inner).py()
}

fn sweep_dict<'py>(py: Python<'py>, r: &SweepReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("parameters", r.parameters.clone())?;
    d.set_item("errors", r.errors.clone())?;
    d.set_item("fitted", r.fitted)?;
    d.set_item("target", r.target)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

/// Filter error `||u_bar - u||` over decreasing `alphas`, with the fitted
/// log-log slope.
#[pyfunction]
#[pyo3(signature = (u, params, alphas, s_norm = 0.0))]
fn sweep_alpha<'py>(
    py: Python<'py>,
    u: &Field,
    params: &FilterParams,
    alphas: Vec<f64>,
    s_norm: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = alpha_sweep(&u.inner, &params.inner, &alphas, s_norm).py()?;
    sweep_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (u, params, orders, s_norm = 0.0))]
fn sweep_order<'py>(
    py: Python<'py>,
    u: &Field,
    params: &FilterParams,
    orders: Vec<u32>,
    s_norm: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = n_sweep(&u.inner, &params.inner, &orders, s_norm).py()?;
    sweep_dict(py, &r)
}

/// Parses a config and returns its canonical text.
#[pyfunction]
fn normalize_config(text: &str) -> PyResult<String> {
    Ok(parse_config(text).py()?.to_string())
}

/// Runs a config, writing outputs under `base`. Returns the summary as a
/// dict of strings.
#[pyfunction]
#[pyo3(signature = (text, base = PathBuf::from(".")))]
fn run_from_config<'py>(py: Python<'py>, text: &str, base: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse_config(text).py()?;
    let out = py.detach(|| run_config(&cfg, &base)).py()?;
    let d = PyDict::new(py);
    for line in out.summary().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            d.set_item(k, v)?;
        }
    }
    Ok(d)
}

/// Runs acceptance criteria (all by default). Returns a list of
/// `(id, name, passed, detail, seconds)`.
#[pyfunction]
#[pyo3(signature = (criteria = None))]
fn validate(py: Python<'_>, criteria: Option<Vec<usize>>) -> Vec<(usize, String, bool, String, f64)> {
    let ids = criteria.unwrap_or_else(|| CRITERIA.iter().map(|c| c.0).collect());
    let report = py.detach(|| run_selected(&ids, Options::default(), false));
    report
        .results
        .into_iter()
        .map(|r| (r.id, r.name.to_string(), r.passed, r.detail, r.seconds))
        .collect()
}

#[pymodule]
fn leray(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<FilterParams>()?;
    m.add_class::<Field>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(advect_fields, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(budget_residual, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_order, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_from_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
