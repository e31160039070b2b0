//! Model right-hand sides.
//!
//! The evolution equations are written as
//! `du/dt + nu A u = N(u, b) + f` and `db/dt + nu2 A b = M(u, b)`, where
//! `A = -Delta` is handled by the time stepper and `N`, `M` are the
//! projected nonlinear tendencies returned by [`rhs`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{same_grid, SpectralScalarField, SpectralVectorField};
use crate::filter::{
    deconvolution_gain, deconvolve, filter_apply, filter_gain, FilterParams, CRITICAL_THETA,
};
use crate::grid::WaveGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Nse,
    LerayAlpha,
    LerayDeconv,
    MhdDeconv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Nse,
        ModelKind::LerayAlpha,
        ModelKind::LerayDeconv,
        ModelKind::MhdDeconv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nse => "nse",
            ModelKind::LerayAlpha => "leray-alpha",
            ModelKind::LerayDeconv => "leray-deconv",
            ModelKind::MhdDeconv => "mhd-deconv",
        }
    }

    /// Stable numeric tag used by the checkpoint format.
    pub fn code(self) -> u32 {
        match self {
            ModelKind::Nse => 0,
            ModelKind::LerayAlpha => 1,
            ModelKind::LerayDeconv => 2,
            ModelKind::MhdDeconv => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        ModelKind::ALL.get(code as usize).copied()
    }

    /// Whether the model carries a filtered advecting velocity.
    pub fn is_regularized(self) -> bool {
        !matches!(self, ModelKind::Nse)
    }

    pub fn has_magnetic_field(self) -> bool {
        matches!(self, ModelKind::MhdDeconv)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nse" | "navier-stokes" => Ok(ModelKind::Nse),
            "leray-alpha" | "lerayalpha" => Ok(ModelKind::LerayAlpha),
            "leray-deconv" | "leraydeconv" => Ok(ModelKind::LerayDeconv),
            "mhd-deconv" | "mhddeconv" => Ok(ModelKind::MhdDeconv),
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

/// One forced Fourier mode `amplitude * exp(-decay t) * exp(i k.x)` plus its
/// conjugate partner at `-k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingMode {
    pub wave_index: [i32; 3],
    pub amplitude: Vec<Complex64>,
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Modes(Vec<ForcingMode>),
}

impl ForcingSpec {
    /// Arnold-Beltrami-Childress field `(A sin z + C cos y, B sin x + A cos z,
    /// C sin y + B cos x)` at unit wave index, scaled by `scale`.
    pub fn abc(a: f64, b: f64, c: f64, scale: f64) -> Self {
        let re = |x: f64| Complex64::new(x * scale, 0.0);
        let im = |x: f64| Complex64::new(0.0, x * scale);
        let z = Complex64::new(0.0, 0.0);
        ForcingSpec::Modes(vec![
            ForcingMode {
                wave_index: [0, 0, 1],
                amplitude: vec![im(-a / 2.0), re(a / 2.0), z],
                decay: 0.0,
            },
            ForcingMode {
                wave_index: [1, 0, 0],
                amplitude: vec![z, im(-b / 2.0), re(b / 2.0)],
                decay: 0.0,
            },
            ForcingMode {
                wave_index: [0, 1, 0],
                amplitude: vec![re(c / 2.0), z, im(-c / 2.0)],
                decay: 0.0,
            },
        ])
    }

    /// Shear forcing `(A sin(m y), 0[, 0])`.
    pub fn kolmogorov(dim: usize, amplitude: f64, m: i32) -> Self {
        let mut amp = vec![Complex64::new(0.0, 0.0); dim];
        amp[0] = Complex64::new(0.0, -amplitude / 2.0);
        ForcingSpec::Modes(vec![ForcingMode {
            wave_index: [0, m, 0],
            amplitude: amp,
            decay: 0.0,
        }])
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Zero => true,
            ForcingSpec::Modes(m) => m.is_empty(),
        }
    }

    pub fn validate(&self, grid: &WaveGrid) -> Result<()> {
        let ForcingSpec::Modes(modes) = self else {
            return Ok(());
        };
        for m in modes {
            let a = m.wave_index;
            if a == [0, 0, 0] {
                return Err(Error::invalid("forcing mode at a = 0"));
            }
            let slot = grid
                .slot_of(a)
                .filter(|&s| grid.is_retained(s))
                .ok_or_else(|| {
                    Error::invalid(format!("forcing mode {a:?} lies outside the dealiased band"))
                })?;
            if m.amplitude.len() != grid.dim() {
                return Err(Error::invalid(format!(
                    "forcing mode {a:?} needs {} amplitude components",
                    grid.dim()
                )));
            }
            let k = grid.wavevector(slot);
            let dot: Complex64 = m.amplitude.iter().zip(k.iter()).map(|(c, kj)| c * kj).sum();
            let scale: f64 = m.amplitude.iter().map(|c| c.norm()).sum::<f64>() * grid.k_mag(slot);
            if dot.norm() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "forcing mode {a:?} is not divergence-free"
                )));
            }
            if !m.decay.is_finite() {
                return Err(Error::invalid("forcing decay rate must be finite"));
            }
        }
        Ok(())
    }

    /// `f(t)` in spectral space, or `None` for zero forcing.
    pub fn evaluate(&self, grid: &Arc<WaveGrid>, t: f64) -> Option<SpectralVectorField> {
        let ForcingSpec::Modes(modes) = self else {
            return None;
        };
        if modes.is_empty() {
            return None;
        }
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; grid.dim()];
        for m in modes {
            let Some(slot) = grid.slot_of(m.wave_index) else {
                continue;
            };
            let mirror = grid.mirror(slot);
            let s = (-m.decay * t).exp();
            for (c, amp) in comps.iter_mut().zip(&m.amplitude) {
                c[slot] += amp * s;
                c[mirror] += amp.conj() * s;
            }
        }
        Some(SpectralVectorField::from_components(grid, comps).expect("grid-sized components"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub nu: f64,
    /// Magnetic diffusivity, MHD only.
    pub nu2: Option<f64>,
    pub filter: FilterParams,
    pub forcing: ForcingSpec,
    /// Allows `theta < 1/4` for the regularized models.
    pub unsafe_subcritical: bool,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, nu: f64, filter: FilterParams) -> Self {
        ModelConfig {
            kind,
            nu,
            nu2: None,
            filter,
            forcing: ForcingSpec::Zero,
            unsafe_subcritical: false,
        }
    }

    pub fn nse(nu: f64) -> Self {
        Self::new(ModelKind::Nse, nu, FilterParams::default())
    }

    pub fn mhd(nu: f64, nu2: f64, filter: FilterParams) -> Self {
        ModelConfig {
            nu2: Some(nu2),
            ..Self::new(ModelKind::MhdDeconv, nu, filter)
        }
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn validate(&self, grid: &WaveGrid) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be positive, got {}", self.nu)));
        }
        match (self.kind.has_magnetic_field(), self.nu2) {
            (true, None) => return Err(Error::invalid("MHD model requires nu2")),
            (true, Some(v)) if !(v > 0.0 && v.is_finite()) => {
                return Err(Error::invalid(format!("nu2 must be positive, got {v}")))
            }
            (false, Some(_)) => return Err(Error::invalid("nu2 is only meaningful for MHD")),
            _ => {}
        }
        if self.kind.has_magnetic_field() && !self.forcing.is_zero() {
            return Err(Error::invalid("the MHD model is unforced"));
        }
        self.filter.validate()?;
        self.check_criticality()?;
        self.forcing.validate(grid)
    }

    pub fn check_criticality(&self) -> Result<()> {
        if self.kind.is_regularized() && self.filter.theta < CRITICAL_THETA && !self.unsafe_subcritical
        {
            return Err(Error::CriticalityViolation {
                theta: self.filter.theta,
            });
        }
        Ok(())
    }

    /// Velocity that transports momentum: `u`, `u_bar`, or `H_N u`.
    pub fn advecting(&self, u: &SpectralVectorField) -> SpectralVectorField {
        match self.kind {
            ModelKind::Nse => u.clone(),
            ModelKind::LerayAlpha => filter_apply(u, &self.filter),
            ModelKind::LerayDeconv | ModelKind::MhdDeconv => deconvolve(u, &self.filter),
        }
    }

    /// Per-mode multiplier turning `u` into the advecting velocity, or `None`
    /// when that velocity is `u` itself.
    pub fn advecting_gain(&self, grid: &WaveGrid) -> Option<Vec<f64>> {
        let p = &self.filter;
        if self.kind == ModelKind::Nse || p.alpha == 0.0 {
            return None;
        }
        let gain = |k: f64| match self.kind {
            ModelKind::LerayAlpha => filter_gain(k, p),
            _ => deconvolution_gain(k, p),
        };
        Some(grid.radial(|k2| gain(k2.sqrt())))
    }

    pub fn magnetic_diffusivity(&self) -> f64 {
        self.nu2.unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: SpectralVectorField,
    pub b: Option<SpectralVectorField>,
}

impl SimState {
    pub fn new(t: f64, u: SpectralVectorField) -> Self {
        SimState { t, u, b: None }
    }

    pub fn with_magnetic(t: f64, u: SpectralVectorField, b: SpectralVectorField) -> Self {
        SimState { t, u, b: Some(b) }
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        self.u.grid()
    }

    pub fn fields(&self) -> impl Iterator<Item = &SpectralVectorField> {
        std::iter::once(&self.u).chain(self.b.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.fields().all(|f| f.is_finite())
    }

    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        if cfg.kind.has_magnetic_field() && self.b.is_none() {
            return Err(Error::MissingMagneticField);
        }
        if !cfg.kind.has_magnetic_field() && self.b.is_some() {
            return Err(Error::invalid("magnetic field given for a non-MHD model"));
        }
        if let Some(b) = &self.b {
            self.u.check_grid(b)?;
        }
        Ok(())
    }
}

/// Projected nonlinear tendencies (viscous terms excluded).
#[derive(Clone, Debug)]
pub struct Tendency {
    pub du: SpectralVectorField,
    pub db: Option<SpectralVectorField>,
    /// L2 size of the gradient part removed from the magnetic tendency.
    pub b_projection_correction: f64,
}

/// How quadratic products are truncated after the physical-space multiply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dealias {
    #[default]
    TwoThirds,
    /// No mask at all. Only for demonstrating aliasing errors.
    Off,
}

/// `(w_i . grad) v_j` for every requested `(i, j)` pair, unprojected,
/// sharing inverse transforms across pairs.
fn convective_products(
    advecting: &[&SpectralVectorField],
    advected: &[&SpectralVectorField],
    pairs: &[(usize, usize)],
    dealias: Dealias,
) -> Vec<SpectralVectorField> {
    let grid = advecting[0].grid().clone();
    let d = grid.dim();
    let mut spectra: Vec<Vec<Complex64>> = Vec::new();
    for w in advecting {
        spectra.extend(w.components().iter().cloned());
    }
    for v in advected {
        spectra.extend(v.gradient_spectra());
    }
    let refs: Vec<&[Complex64]> = spectra.iter().map(|s| s.as_slice()).collect();
    let phys = grid.inverse_real_many(&refs);
    let (w_phys, grad_phys) = phys.split_at(advecting.len() * d);

    let mut products: Vec<Vec<f64>> = Vec::with_capacity(pairs.len() * d);
    let w_zero: Vec<bool> = advecting.iter().map(|w| w.max_abs() == 0.0).collect();
    let v_zero: Vec<bool> = advected.iter().map(|v| v.max_abs() == 0.0).collect();
    for &(wi, vi) in pairs {
        if w_zero[wi] || v_zero[vi] {
            products.extend((0..d).map(|_| vec![0.0; grid.len()]));
            continue;
        }
        let w = &w_phys[wi * d..(wi + 1) * d];
        let gv = &grad_phys[vi * d * d..(vi + 1) * d * d];
        for c in 0..d {
            let mut out = vec![0.0; grid.len()];
            for m in 0..d {
                let (wm, g) = (&w[m], &gv[c * d + m]);
                out.par_chunks_mut(4096).enumerate().for_each(|(i, chunk)| {
                    let base = i * 4096;
                    for (o, (x, y)) in chunk
                        .iter_mut()
                        .zip(wm[base..].iter().zip(&g[base..]))
                    {
                        *o += x * y;
                    }
                });
            }
            products.push(out);
        }
    }
    let refs: Vec<&[f64]> = products.iter().map(|p| p.as_slice()).collect();
    let mut spectral = grid.forward_real_many(&refs).into_iter();
    pairs
        .iter()
        .map(|_| {
            let comps: Vec<Vec<Complex64>> = (0..d).map(|_| spectral.next().unwrap()).collect();
            let f = SpectralVectorField::from_components(&grid, comps).unwrap();
            match dealias {
                Dealias::TwoThirds => f.dealias(),
                Dealias::Off => f,
            }
        })
        .collect()
}

fn check_pair(w: &SpectralVectorField, v: &SpectralVectorField) -> Result<()> {
    if !same_grid(w.grid(), v.grid()) || w.ncomp() != w.grid().dim() || v.ncomp() != v.grid().dim()
    {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Dealiased `(w . grad) v` without the Leray projection.
pub fn convective_term(w: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    check_pair(w, v)?;
    Ok(convective_products(&[w], &[v], &[(0, 0)], Dealias::TwoThirds).remove(0))
}

/// `B(w, v) = P_sigma (w . grad) v`, computed pseudo-spectrally with the
/// 2/3-rule mask.
pub fn advect(w: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    advect_with(w, v, Dealias::TwoThirds)
}

pub fn advect_with(
    w: &SpectralVectorField,
    v: &SpectralVectorField,
    dealias: Dealias,
) -> Result<SpectralVectorField> {
    check_pair(w, v)?;
    Ok(convective_products(&[w], &[v], &[(0, 0)], dealias)
        .remove(0)
        .leray_project())
}

/// Unprojected momentum tendency (everything except pressure, viscosity and
/// forcing) and, for MHD, the unprojected induction tendency.
fn raw_tendencies(
    state: &SimState,
    cfg: &ModelConfig,
    gain: Option<&[f64]>,
) -> Result<(SpectralVectorField, Option<SpectralVectorField>)> {
    state.validate(cfg)?;
    let u = &state.u;
    let smooth = |f: &SpectralVectorField| match gain {
        Some(g) => f.scaled_by(|s| g[s]),
        None => f.clone(),
    };
    match cfg.kind {
        ModelKind::Nse | ModelKind::LerayAlpha | ModelKind::LerayDeconv => {
            let adv = smooth(u);
            let n = convective_products(&[&adv], &[u], &[(0, 0)], Dealias::TwoThirds).remove(0);
            Ok((n.scale(-1.0), None))
        }
        ModelKind::MhdDeconv => {
            let b = state.b.as_ref().ok_or(Error::MissingMagneticField)?;
            let hu = smooth(u);
            let hb = smooth(b);
            let mut p = convective_products(
                &[&hu, &hb],
                &[u, b],
                &[(0, 0), (1, 1), (0, 1), (1, 0)],
                Dealias::TwoThirds,
            )
            .into_iter();
            let (uu, bb, ub, bu) = (
                p.next().unwrap(),
                p.next().unwrap(),
                p.next().unwrap(),
                p.next().unwrap(),
            );
            Ok((bb.sub(&uu)?, Some(bu.sub(&ub)?)))
        }
    }
}

/// Nonlinear tendencies of the configured model at `state`.
pub fn rhs(state: &SimState, cfg: &ModelConfig) -> Result<Tendency> {
    rhs_with_gain(state, cfg, cfg.advecting_gain(state.grid()).as_deref())
}

/// [`rhs`] with the advecting multiplier precomputed by
/// [`ModelConfig::advecting_gain`].
pub(crate) fn rhs_with_gain(
    state: &SimState,
    cfg: &ModelConfig,
    gain: Option<&[f64]>,
) -> Result<Tendency> {
    cfg.check_criticality()?;
    let (raw_u, raw_b) = raw_tendencies(state, cfg, gain)?;
    let mut du = raw_u.leray_project();
    if let Some(f) = cfg.forcing.evaluate(state.grid(), state.t) {
        du.add_assign_scaled(1.0, &f);
    }
    let (db, correction) = match raw_b {
        Some(raw) => {
            let projected = raw.leray_project();
            let correction = raw.sub(&projected)?.l2_norm();
            (Some(projected), correction)
        }
        None => (None, 0.0),
    };
    Ok(Tendency {
        du,
        db,
        b_projection_correction: correction,
    })
}

fn scalar_from_divergence(t: &SpectralVectorField) -> SpectralScalarField {
    let g = t.grid();
    let d = g.dim();
    let coeffs = (0..g.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|slot| {
            let k2 = g.k2(slot);
            if k2 == 0.0 || g.is_nyquist(slot) {
                return Complex64::new(0.0, 0.0);
            }
            let k = g.wavevector(slot);
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..d {
                dot += t.component(j)[slot] * k[j];
            }
            dot * Complex64::new(0.0, -1.0 / k2)
        })
        .collect();
    SpectralScalarField::new(g, coeffs).expect("grid-sized")
}

/// Pressure whose gradient balances the gradient part of the momentum
/// tendency. For MHD this is the total pressure `p + |b|^2/2`.
pub fn total_pressure(state: &SimState, cfg: &ModelConfig) -> Result<SpectralScalarField> {
    let (raw_u, _) = raw_tendencies(state, cfg, cfg.advecting_gain(state.grid()).as_deref())?;
    Ok(scalar_from_divergence(&raw_u))
}

/// Zero-mean pressure `p`, solving `-Delta p = div div (w u)` for the
/// advecting velocity `w`. For MHD the magnetic pressure `|b|^2/2` is split
/// off (dealiased), matching the momentum equation's `grad p + grad |b|^2/2`.
pub fn pressure_solve(state: &SimState, cfg: &ModelConfig) -> Result<SpectralScalarField> {
    let total = total_pressure(state, cfg)?;
    let Some(b) = &state.b else {
        return Ok(total);
    };
    let grid = b.grid();
    let phys = b.to_physical();
    let half_b2: Vec<f64> = (0..grid.len())
        .map(|p| 0.5 * phys.components().iter().map(|c| c[p] * c[p]).sum::<f64>())
        .collect();
    let spec = grid.forward_real_many(&[&half_b2]).remove(0);
    let coeffs = total
        .coeffs()
        .iter()
        .zip(&spec)
        .enumerate()
        .map(|(slot, (pt, m))| match slot {
            0 => Complex64::new(0.0, 0.0),
            s if grid.is_retained(s) => pt - m,
            _ => *pt,
        })
        .collect();
    SpectralScalarField::new(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RealVectorField;
    use std::f64::consts::PI;

    fn tg_state(n: usize) -> (Arc<WaveGrid>, SimState) {
        let g = WaveGrid::new(2, n, 2.0 * PI).unwrap();
        let u = SpectralVectorField::taylor_green(&g, 1.0);
        (g, SimState::new(0.0, u))
    }

    #[test]
    fn taylor_green_advection_is_pure_gradient() {
        let (_, s) = tg_state(32);
        let b = advect(&s.u, &s.u).unwrap();
        assert!(b.max_abs() < 1e-15);
        let raw = convective_term(&s.u, &s.u).unwrap();
        assert!(raw.max_abs() > 0.1);
    }

    #[test]
    fn zero_advecting_field_gives_zero() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let v = SpectralVectorField::random_solenoidal(&g, 1, 0.0, 3).unwrap();
        let w = SpectralVectorField::zeros(&g);
        assert_eq!(advect(&w, &v).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let g2 = WaveGrid::new(3, 8, 2.0 * PI).unwrap();
        let a = SpectralVectorField::zeros(&g1);
        let b = SpectralVectorField::zeros(&g2);
        assert!(matches!(advect(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn leray_alpha_tendency_on_taylor_green_is_forcing() {
        let (g, s) = tg_state(32);
        let forcing = ForcingSpec::kolmogorov(2, 0.3, 2);
        for alpha in [0.0, 0.3, 2.0] {
            let cfg = ModelConfig::new(
                ModelKind::LerayAlpha,
                0.01,
                FilterParams::new(alpha, 0.25, 0).unwrap(),
            )
            .with_forcing(forcing.clone());
            let t = rhs(&s, &cfg).unwrap();
            let f = forcing.evaluate(&g, 0.0).unwrap();
            assert!(t.du.sub(&f).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_has_zero_tendency() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let z = SpectralVectorField::zeros(&g);
        let s = SimState::with_magnetic(0.0, z.clone(), z);
        let cfg = ModelConfig::mhd(0.02, 0.02, FilterParams::new(0.1, 0.25, 2).unwrap());
        let t = rhs(&s, &cfg).unwrap();
        assert_eq!(t.du.max_abs(), 0.0);
        assert_eq!(t.db.unwrap().max_abs(), 0.0);
    }

    #[test]
    fn criticality_gate() {
        let (_, s) = tg_state(16);
        let mut cfg = ModelConfig::new(
            ModelKind::LerayAlpha,
            0.01,
            FilterParams::new(0.1, 0.1, 0).unwrap(),
        );
        assert!(matches!(rhs(&s, &cfg), Err(Error::CriticalityViolation { .. })));
        cfg.unsafe_subcritical = true;
        assert!(rhs(&s, &cfg).is_ok());
        let nse = ModelConfig {
            filter: FilterParams::new(0.0, 0.1, 0).unwrap(),
            ..ModelConfig::nse(0.01)
        };
        assert!(rhs(&s, &nse).is_ok());
    }

    #[test]
    fn mhd_requires_magnetic_field() {
        let (_, s) = tg_state(16);
        let cfg = ModelConfig::mhd(0.01, 0.01, FilterParams::new(0.1, 0.25, 1).unwrap());
        assert!(matches!(rhs(&s, &cfg), Err(Error::MissingMagneticField)));
    }

    #[test]
    fn deconv_order_zero_matches_leray_alpha_bitwise() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let u = SpectralVectorField::random_solenoidal(&g, 4, -1.0, 5).unwrap();
        let s = SimState::new(0.0, u);
        let p = FilterParams::new(0.2, 0.25, 0).unwrap();
        let a = rhs(&s, &ModelConfig::new(ModelKind::LerayAlpha, 0.01, p)).unwrap();
        let d = rhs(&s, &ModelConfig::new(ModelKind::LerayDeconv, 0.01, p)).unwrap();
        assert_eq!(a.du, d.du);
    }

    #[test]
    fn taylor_green_pressure() {
        let (g, s) = tg_state(32);
        let p = pressure_solve(&s, &ModelConfig::nse(0.01)).unwrap();
        let phys = p.to_physical();
        let mut worst = 0.0f64;
        for (slot, v) in phys.iter().enumerate() {
            let x = g.point(slot);
            let exact = ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0;
            worst = worst.max((v - exact).abs());
        }
        assert!(worst < 1e-14, "{worst}");
        let zero = SimState::new(0.0, SpectralVectorField::zeros(&g));
        assert_eq!(pressure_solve(&zero, &ModelConfig::nse(0.1)).unwrap().to_physical().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn pressure_gradient_is_gradient_part_of_tendency() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let u = SpectralVectorField::random_solenoidal(&g, 8, -1.0, 5).unwrap();
        let s = SimState::new(0.0, u.clone());
        let cfg = ModelConfig::new(ModelKind::LerayAlpha, 0.05, FilterParams::new(0.3, 0.25, 0).unwrap());
        let p = pressure_solve(&s, &cfg).unwrap();
        let raw = convective_term(&cfg.advecting(&u), &u).unwrap().scale(-1.0);
        let complement = raw.sub(&raw.leray_project()).unwrap();
        let diff = complement.sub(&p.gradient()).unwrap();
        assert!(diff.max_abs() <= 1e-10 * complement.max_abs().max(1e-300));
    }

    #[test]
    fn forcing_validation() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        assert!(ForcingSpec::abc(1.0, 0.5, 0.25, 1.0).validate(&g).is_ok());
        let bad = ForcingSpec::Modes(vec![ForcingMode {
            wave_index: [1, 0, 0],
            amplitude: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            decay: 0.0,
        }]);
        assert!(bad.validate(&g).is_err());
        let far = ForcingSpec::kolmogorov(3, 1.0, 7);
        assert!(far.validate(&g).is_err());
    }

    #[test]
    fn abc_forcing_is_beltrami_field() {
        let g = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let f = ForcingSpec::abc(1.0, 0.7, 0.4, 1.0).evaluate(&g, 0.0).unwrap();
        let phys = f.inverse_transform().unwrap();
        let exact = RealVectorField::from_fn(&g, 3, |x| {
            vec![
                x[2].sin() + 0.4 * x[1].cos(),
                0.7 * x[0].sin() + x[2].cos(),
                0.4 * x[1].sin() + 0.7 * x[0].cos(),
            ]
        });
        for c in 0..3 {
            for (a, b) in phys.component(c).iter().zip(exact.component(c)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!(f.divergence_residual() < 1e-15);
    }
}
