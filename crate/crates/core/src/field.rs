//! Spectral and physical vector fields on a [`WaveGrid`].
//!
//! Norms are volume-averaged: `sobolev_norm(u, 0)^2 = (1/L^d) int |u|^2`.
//! Modes with a Nyquist index (`a_j = n/2` on some axis) are pinned to zero
//! by every solver-facing operation (projection, generation, dealiasing);
//! the raw transforms keep them so that physical data round-trips.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::WaveGrid;
use crate::par::ordered_sum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative Hermitian residue above which inverse transforms refuse.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

pub(crate) fn same_grid(a: &Arc<WaveGrid>, b: &Arc<WaveGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Real samples of a vector field at the physical grid points.
#[derive(Clone)]
pub struct RealVectorField {
    grid: Arc<WaveGrid>,
    comps: Vec<Vec<f64>>,
}

impl fmt::Debug for RealVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealVectorField")
            .field("grid", &self.grid)
            .field("components", &self.comps.len())
            .finish()
    }
}

impl RealVectorField {
    pub fn zeros(grid: &Arc<WaveGrid>, ncomp: usize) -> Self {
        RealVectorField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; ncomp],
        }
    }

    pub fn from_components(grid: &Arc<WaveGrid>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::invalid(format!(
                "each component needs {} samples",
                grid.len()
            )));
        }
        Ok(RealVectorField {
            grid: grid.clone(),
            comps,
        })
    }

    /// Samples `f(x)` at every grid point; `f` returns one value per component.
    pub fn from_fn<F>(grid: &Arc<WaveGrid>, ncomp: usize, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Vec<f64> + Sync,
    {
        let samples: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|slot| f(grid.point(slot)))
            .collect();
        let comps = (0..ncomp)
            .map(|j| samples.iter().map(|s| s[j]).collect())
            .collect();
        RealVectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Spatial mean of `|u|^2`, i.e. `(1/L^d) int |u|^2` by the grid rule.
    pub fn mean_square(&self) -> f64 {
        let n = self.grid.len() as f64;
        self.comps
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / n
    }
}

/// Complex Fourier coefficients of a real vector field.
#[derive(Clone)]
pub struct SpectralVectorField {
    grid: Arc<WaveGrid>,
    comps: Vec<Vec<Complex64>>,
}

impl fmt::Debug for SpectralVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralVectorField")
            .field("grid", &self.grid)
            .field("components", &self.comps.len())
            .field("l2", &self.l2_norm())
            .finish()
    }
}

impl PartialEq for SpectralVectorField {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.comps == other.comps
    }
}

impl SpectralVectorField {
    /// Zero field with `dim` components.
    pub fn zeros(grid: &Arc<WaveGrid>) -> Self {
        Self::zeros_with(grid, grid.dim())
    }

    pub fn zeros_with(grid: &Arc<WaveGrid>, ncomp: usize) -> Self {
        SpectralVectorField {
            grid: grid.clone(),
            comps: vec![vec![ZERO; grid.len()]; ncomp],
        }
    }

    pub fn from_components(grid: &Arc<WaveGrid>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::invalid(format!(
                "each component needs {} coefficients",
                grid.len()
            )));
        }
        Ok(SpectralVectorField {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient vector at wave index `a`, if representable.
    pub fn mode(&self, a: [i32; 3]) -> Option<Vec<Complex64>> {
        let slot = self.grid.slot_of(a)?;
        Some(self.comps.iter().map(|c| c[slot]).collect())
    }

    /// Sets the coefficient at `a` and its conjugate at `-a`.
    pub fn set_mode(&mut self, a: [i32; 3], value: &[Complex64]) -> Result<()> {
        let slot = self
            .grid
            .slot_of(a)
            .ok_or_else(|| Error::invalid(format!("wave index {a:?} is not on the grid")))?;
        if value.len() != self.comps.len() {
            return Err(Error::invalid("mode value has the wrong number of components"));
        }
        let m = self.grid.mirror(slot);
        for (c, v) in self.comps.iter_mut().zip(value) {
            c[slot] = *v;
            c[m] = v.conj();
        }
        if m == slot {
            for c in self.comps.iter_mut() {
                c[slot].im = 0.0;
            }
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, other: &SpectralVectorField) -> Result<()> {
        if same_grid(&self.grid, &other.grid) && self.ncomp() == other.ncomp() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Applies a real per-mode multiplier.
    pub fn scaled_by<F>(&self, mult: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let factors: Vec<f64> = (0..self.grid.len()).into_par_iter().map(&mult).collect();
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(&factors).map(|(v, &f)| v * f).collect())
            .collect();
        SpectralVectorField {
            grid: self.grid.clone(),
            comps,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scaled_by(|_| s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y * s).collect())
            .collect();
        Ok(SpectralVectorField {
            grid: self.grid.clone(),
            comps,
        })
    }

    pub(crate) fn add_assign_scaled(&mut self, s: f64, other: &Self) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
    }

    /// Volume-averaged L^2 inner product `(1/L^d) int u.v`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum::<f64>())
            .sum())
    }

    /// `sqrt(sum_{k != 0} |k|^{2s} |u_k|^2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    pub(crate) fn sobolev_norm_sq(&self, s: f64) -> f64 {
        let g = &self.grid;
        let weight = g.radial(|k2| match (k2 == 0.0, s == 0.0) {
            (true, _) => 0.0,
            (false, true) => 1.0,
            (false, false) => k2.powf(s),
        });
        ordered_sum(g.len(), |slot| {
            let e: f64 = self.comps.iter().map(|c| c[slot].norm_sqr()).sum();
            if e == 0.0 {
                return 0.0;
            }
            weight[slot] * e
        })
    }

    /// Plain `sqrt(sum |u_k|^2)` including the mean mode.
    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.norm_sqr()))
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    /// `max_k |u_k - conj(u_{-k})|`, relative to the largest coefficient.
    pub fn hermitian_residue(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let worst = self
            .comps
            .iter()
            .map(|c| {
                (0..g.len())
                    .map(|s| (c[s] - c[g.mirror(s)].conj()).norm())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        worst / scale
    }

    /// `max_k |k . u_k| / ||u||`.
    pub fn divergence_residual(&self) -> f64 {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let d = self.ncomp().min(g.dim());
        let worst = (0..g.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|slot| {
                let k = g.wavevector(slot);
                let mut acc = ZERO;
                for j in 0..d {
                    acc += self.comps[j][slot] * k[j];
                }
                acc.norm()
            })
            .reduce(|| 0.0, f64::max);
        worst / norm
    }

    /// Leray-Helmholtz projection onto divergence-free fields. Nyquist modes
    /// are zeroed.
    pub fn leray_project(&self) -> Self {
        let g = &self.grid;
        let d = g.dim();
        assert_eq!(self.ncomp(), d, "Leray projection needs a d-component field");
        let mut comps = self.comps.clone();
        let rows: Vec<(usize, [Complex64; 3])> = (0..g.len())
            .into_par_iter()
            .with_min_len(1024)
            .filter_map(|slot| {
                let a2 = g.a2(slot);
                if a2 == 0 {
                    return None;
                }
                if g.is_nyquist(slot) {
                    return Some((slot, [ZERO; 3]));
                }
                let a = g.wave_index(slot);
                let mut dot = ZERO;
                for j in 0..d {
                    dot += self.comps[j][slot] * a[j] as f64;
                }
                let mut out = [ZERO; 3];
                for j in 0..d {
                    out[j] = self.comps[j][slot] - dot * (a[j] as f64 / a2 as f64);
                }
                Some((slot, out))
            })
            .collect();
        for (slot, v) in rows {
            for j in 0..d {
                comps[j][slot] = v[j];
            }
        }
        SpectralVectorField {
            grid: g.clone(),
            comps,
        }
    }

    /// Multiplier `|k|^{2 theta}`; the mean mode is sent to zero for `theta > 0`.
    pub fn fractional_laplacian(&self, theta: f64) -> Self {
        assert!(theta >= 0.0, "fractional order must be non-negative");
        if theta == 0.0 {
            return self.clone();
        }
        let mult = self.grid.radial(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(theta) });
        self.scaled_by(|slot| mult[slot])
    }

    /// Keeps modes with `|k| <= m * 2 pi / L`, i.e. `|a| <= m`.
    pub fn galerkin_project(&self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("Galerkin truncation needs m >= 1"));
        }
        let g = self.grid.clone();
        let m2 = m as i64 * m as i64;
        Ok(self.scaled_by(move |slot| if g.a2(slot) <= m2 { 1.0 } else { 0.0 }))
    }

    /// Zeroes every mode outside the dealias mask.
    pub fn dealias(&self) -> Self {
        let g = self.grid.clone();
        self.scaled_by(move |slot| if g.is_retained(slot) { 1.0 } else { 0.0 })
    }

    /// Zeroes the mean mode.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            c[0] = ZERO;
        }
        out
    }

    /// Components of `d/dx_j u_i`, ordered `i * dim + j`.
    pub(crate) fn gradient_spectra(&self) -> Vec<Vec<Complex64>> {
        let g = &self.grid;
        let d = g.dim();
        let mut out = Vec::with_capacity(self.ncomp() * d);
        for c in &self.comps {
            for j in 0..d {
                out.push(
                    c.par_iter()
                        .with_min_len(1024)
                        .enumerate()
                        .map(|(slot, v)| {
                            let k = g.derivative_symbol(slot)[j];
                            Complex64::new(-k * v.im, k * v.re)
                        })
                        .collect(),
                );
            }
        }
        out
    }

    /// Maps coefficients onto another grid with the same period, matching
    /// wave indices. Modes not representable on the target are dropped, as
    /// are Nyquist modes of the source.
    pub fn resample(&self, target: &Arc<WaveGrid>) -> Result<Self> {
        if target.dim() != self.grid.dim() || target.length().to_bits() != self.grid.length().to_bits()
        {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralVectorField::zeros_with(target, self.ncomp());
        for slot in 0..self.grid.len() {
            if self.grid.is_nyquist(slot) {
                continue;
            }
            if let Some(t) = target.slot_of(self.grid.wave_index(slot)) {
                if target.is_nyquist(t) {
                    continue;
                }
                for (dst, src) in out.comps.iter_mut().zip(&self.comps) {
                    dst[t] = src[slot];
                }
            }
        }
        Ok(out)
    }

    /// Series coefficients of real samples. The mean is kept.
    pub fn forward_transform(r: &RealVectorField) -> Self {
        let refs: Vec<&[f64]> = r.comps.iter().map(|c| c.as_slice()).collect();
        SpectralVectorField {
            grid: r.grid.clone(),
            comps: r.grid.forward_real_many(&refs),
        }
    }

    /// Pointwise evaluation of the truncated series.
    pub fn inverse_transform(&self) -> Result<RealVectorField> {
        let residue = self.hermitian_residue();
        if residue > SYMMETRY_TOLERANCE {
            return Err(Error::SymmetryViolation { residue });
        }
        Ok(self.to_physical())
    }

    pub(crate) fn to_physical(&self) -> RealVectorField {
        let refs: Vec<&[Complex64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        RealVectorField {
            grid: self.grid.clone(),
            comps: self.grid.inverse_real_many(&refs),
        }
    }

    /// Deterministic Hermitian, zero-mean, divergence-free field. Every mode
    /// with `0 < |a| < cutoff_shell + 1/2` gets magnitude `|k|^spectrum_slope`
    /// and a random direction orthogonal to `k`; all other modes are zero.
    pub fn random_solenoidal(
        grid: &Arc<WaveGrid>,
        seed: u64,
        spectrum_slope: f64,
        cutoff_shell: u32,
    ) -> Result<Self> {
        if cutoff_shell as usize > grid.dealias_cutoff() {
            return Err(Error::invalid(format!(
                "cutoff shell {cutoff_shell} exceeds dealias cutoff {}",
                grid.dealias_cutoff()
            )));
        }
        let d = grid.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = SpectralVectorField::zeros(grid);
        let limit = (cutoff_shell as f64 + 0.5).powi(2);
        for slot in 0..grid.len() {
            let m = grid.mirror(slot);
            let a2 = grid.a2(slot);
            if a2 == 0 || m <= slot || (a2 as f64) >= limit || !grid.is_retained(slot) {
                continue;
            }
            let a = grid.wave_index(slot);
            let v = loop {
                let mut v = [ZERO; 3];
                for vj in v.iter_mut().take(d) {
                    *vj = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
                let mut dot = ZERO;
                for j in 0..d {
                    dot += v[j] * a[j] as f64;
                }
                for j in 0..d {
                    v[j] -= dot * (a[j] as f64 / a2 as f64);
                }
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-3 {
                    let amp = grid.k_mag(slot).powf(spectrum_slope) / norm;
                    for vj in v.iter_mut() {
                        *vj *= amp;
                    }
                    break v;
                }
            };
            for j in 0..d {
                out.comps[j][slot] = v[j];
                out.comps[j][m] = v[j].conj();
            }
        }
        Ok(out)
    }

    /// Taylor-Green cell `A (sin x cos y, -cos x sin y)` in 2D, and
    /// `A (sin x cos y cos z, -cos x sin y cos z, 0)` in 3D, with unit
    /// wave indices on a grid of any period.
    pub fn taylor_green(grid: &Arc<WaveGrid>, amplitude: f64) -> Self {
        let mut out = SpectralVectorField::zeros(grid);
        let q = Complex64::new(0.0, -amplitude / 4.0);
        if grid.dim() == 2 {
            // sin x cos y = sum over (+-1, +-1) of sgn(a1) * (-i/4) e^{i(a1 x + a2 y)}
            for a1 in [-1i32, 1] {
                for a2 in [-1i32, 1] {
                    let s = grid.slot_of([a1, a2, 0]).unwrap();
                    out.comps[0][s] = q * a1 as f64;
                    out.comps[1][s] = -q * a2 as f64;
                }
            }
        } else {
            let q = q * 0.5;
            for a1 in [-1i32, 1] {
                for a2 in [-1i32, 1] {
                    for a3 in [-1i32, 1] {
                        let s = grid.slot_of([a1, a2, a3]).unwrap();
                        out.comps[0][s] = q * a1 as f64;
                        out.comps[1][s] = -q * a2 as f64;
                    }
                }
            }
        }
        out
    }
}

/// Spectral scalar field (pressure).
#[derive(Clone)]
pub struct SpectralScalarField {
    grid: Arc<WaveGrid>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralScalarField")
            .field("grid", &self.grid)
            .finish()
    }
}

impl SpectralScalarField {
    pub fn new(grid: &Arc<WaveGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid("scalar field has the wrong length"));
        }
        Ok(SpectralScalarField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, a: [i32; 3]) -> Option<Complex64> {
        self.grid.slot_of(a).map(|s| self.coeffs[s])
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.inverse_real_many(&[&self.coeffs]).remove(0)
    }

    /// `grad p` as a vector field.
    pub fn gradient(&self) -> SpectralVectorField {
        let g = &self.grid;
        let comps = (0..g.dim())
            .map(|j| {
                (0..g.len())
                    .map(|slot| {
                        if g.is_nyquist(slot) {
                            ZERO
                        } else {
                            self.coeffs[slot] * Complex64::new(0.0, g.wavevector(slot)[j])
                        }
                    })
                    .collect()
            })
            .collect();
        SpectralVectorField {
            grid: g.clone(),
            comps,
        }
    }

    pub fn resample(&self, target: &Arc<WaveGrid>) -> Result<Self> {
        let as_vec = SpectralVectorField {
            grid: self.grid.clone(),
            comps: vec![self.coeffs.clone()],
        };
        let out = as_vec.resample(target)?;
        Ok(SpectralScalarField {
            grid: target.clone(),
            coeffs: out.comps.into_iter().next().unwrap(),
        })
    }
}
