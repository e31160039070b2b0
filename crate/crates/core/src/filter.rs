//! Fractional Helmholtz filter and the interpolating deconvolution operator.
//!
//! With `x = (alpha |k|)^{2 theta}` every operator here is a real diagonal
//! multiplier:
//!
//! | operator            | multiplier                   |
//! |---------------------|------------------------------|
//! | `G`                 | `1 + x`                      |
//! | filter `G^{-1}`     | `1 / (1 + x)`                |
//! | deconvolution `H_N` | `1 - (x / (1 + x))^{N + 1}`  |
//!
//! `H_0` is the filter itself. The mean mode always has multiplier 1.

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;

pub const CRITICAL_THETA: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub alpha: f64,
    pub theta: f64,
    pub n_deconv: u32,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            alpha: 0.0,
            theta: CRITICAL_THETA,
            n_deconv: 0,
        }
    }
}

impl FilterParams {
    pub fn new(alpha: f64, theta: f64, n_deconv: u32) -> Result<Self> {
        let p = FilterParams {
            alpha,
            theta,
            n_deconv,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        FilterParams { alpha, ..self }
    }

    pub fn with_order(self, n_deconv: u32) -> Self {
        FilterParams { n_deconv, ..self }
    }

    /// `alpha^{2 theta} |k|^{2 theta}`.
    pub fn scaled_symbol(&self, k_mag: f64) -> f64 {
        if self.alpha == 0.0 || k_mag == 0.0 {
            0.0
        } else {
            (self.alpha * k_mag).powf(2.0 * self.theta)
        }
    }

    /// Per-mode error factor `x / (1 + x)` of the filter.
    pub fn defect_ratio(&self, k_mag: f64) -> f64 {
        let x = self.scaled_symbol(k_mag);
        x / (1.0 + x)
    }
}

pub fn helmholtz_multiplier(k_mag: f64, p: &FilterParams) -> f64 {
    1.0 + p.scaled_symbol(k_mag)
}

pub fn filter_gain(k_mag: f64, p: &FilterParams) -> f64 {
    1.0 / helmholtz_multiplier(k_mag, p)
}

/// `1 - (x/(1+x))^{N+1}`, evaluated without cancellation for large `x`.
/// For `N = 0` this is bitwise the filter gain.
pub fn deconvolution_gain(k_mag: f64, p: &FilterParams) -> f64 {
    let g = filter_gain(k_mag, p);
    if p.n_deconv == 0 {
        return g;
    }
    let order = (p.n_deconv + 1) as f64;
    -(order * (-g).ln_1p()).exp_m1()
}

/// `u_bar = (I + alpha^{2 theta} (-Delta)^theta)^{-1} u`.
pub fn filter_apply(u: &SpectralVectorField, p: &FilterParams) -> SpectralVectorField {
    if p.alpha == 0.0 {
        return u.clone();
    }
    let gain = u.grid().radial(|k2| filter_gain(k2.sqrt(), p));
    u.scaled_by(|slot| gain[slot])
}

/// `G u`, the inverse of [`filter_apply`].
pub fn helmholtz_apply(u: &SpectralVectorField, p: &FilterParams) -> SpectralVectorField {
    let mult = u.grid().radial(|k2| helmholtz_multiplier(k2.sqrt(), p));
    u.scaled_by(|slot| mult[slot])
}

/// `H_N u` through the closed-form multiplier.
pub fn deconvolve(u: &SpectralVectorField, p: &FilterParams) -> SpectralVectorField {
    if p.alpha == 0.0 {
        return u.clone();
    }
    let gain = u.grid().radial(|k2| deconvolution_gain(k2.sqrt(), p));
    u.scaled_by(|slot| gain[slot])
}

/// `H_N u = sum_{n=0}^{N} (I - G^{-1})^n u_bar`, summed term by term.
pub fn van_cittert_series(u: &SpectralVectorField, p: &FilterParams) -> SpectralVectorField {
    let bar = filter_apply(u, p);
    let mut term = bar.clone();
    let mut acc = bar;
    for _ in 0..p.n_deconv {
        let smoothed = filter_apply(&term, p);
        term.add_assign_scaled(-1.0, &smoothed);
        acc.add_assign_scaled(1.0, &term);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WaveGrid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn fp(alpha: f64, theta: f64, n: u32) -> FilterParams {
        FilterParams::new(alpha, theta, n).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        for k in [0.0, 1.0, 3.7, 100.0] {
            assert_eq!(helmholtz_multiplier(k, &fp(0.0, 0.25, 0)), 1.0);
        }
        assert_eq!(helmholtz_multiplier(1.0, &fp(1.0, 0.25, 0)), 2.0);
        assert!((helmholtz_multiplier(16.0, &fp(16.0, 0.25, 0)) - 17.0).abs() < 1e-13);
        assert_eq!(helmholtz_multiplier(0.0, &fp(3.0, 0.5, 0)), 1.0);
    }

    #[test]
    fn params_are_validated() {
        assert!(FilterParams::new(-1.0, 0.25, 0).is_err());
        assert!(FilterParams::new(1.0, 1.5, 0).is_err());
        assert!(FilterParams::new(1.0, -0.1, 0).is_err());
        assert!(FilterParams::new(0.0, 0.0, 3).is_ok());
    }

    #[test]
    fn deconvolution_gain_examples() {
        let p = fp(1.0, 0.25, 1);
        assert!((deconvolution_gain(1.0, &p) - 0.75).abs() < 1e-15);
        for n in [0, 1, 5, 40] {
            assert_eq!(deconvolution_gain(7.0, &fp(0.0, 0.5, n)), 1.0);
        }
        let g0 = deconvolution_gain(5.0, &fp(0.3, 0.25, 0));
        assert_eq!(g0.to_bits(), filter_gain(5.0, &fp(0.3, 0.25, 0)).to_bits());
    }

    #[test]
    fn gain_increases_with_order() {
        let base = fp(0.7, 0.25, 0);
        for k in [1.0, 2.0, 9.0] {
            let mut prev = 0.0;
            for n in 0..30 {
                let g = deconvolution_gain(k, &base.with_order(n));
                assert!(g > prev && g <= 1.0, "k {k} n {n}");
                prev = g;
            }
        }
    }

    #[test]
    fn filter_halves_unit_mode() {
        let grid = WaveGrid::new(3, 8, 2.0 * PI).unwrap();
        let mut u = SpectralVectorField::zeros(&grid);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        u.set_mode([0, 1, 0], &[one, zero, zero]).unwrap();
        let bar = filter_apply(&u, &fp(1.0, 0.25, 0));
        assert!((bar.mode([0, 1, 0]).unwrap()[0] - 0.5).norm() < 1e-15);
        assert_eq!(filter_apply(&u, &fp(0.0, 0.25, 0)), u);
        let back = helmholtz_apply(&bar, &fp(1.0, 0.25, 0));
        assert!(back.sub(&u).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn series_agrees_with_closed_form() {
        let grid = WaveGrid::new(3, 16, 2.0 * PI).unwrap();
        let u = SpectralVectorField::random_solenoidal(&grid, 11, -1.0, 5).unwrap();
        let p0 = fp(0.4, 0.25, 0);
        assert_eq!(van_cittert_series(&u, &p0), filter_apply(&u, &p0));
        assert_eq!(deconvolve(&u, &p0), filter_apply(&u, &p0));
        let p3 = p0.with_order(3);
        let diff = deconvolve(&u, &p3).sub(&van_cittert_series(&u, &p3)).unwrap();
        assert!(diff.sobolev_norm(1.0) <= 1e-12 * u.sobolev_norm(1.0));
        let p_id = fp(0.0, 0.5, 4);
        assert_eq!(van_cittert_series(&u, &p_id), u);
        assert_eq!(deconvolve(&u, &p_id), u);
    }
}
