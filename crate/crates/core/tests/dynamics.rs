use std::f64::consts::PI;
use std::sync::Arc;

use leray_core::dynamics::{advect_with, convective_term, pressure_solve, Dealias};
use leray_core::validation::direct_advection;
use leray_core::{
    advect, deconvolve, filter_apply, rhs, FilterParams, ForcingSpec, ModelConfig, ModelKind, SimState,
    SpectralVectorField, WaveGrid,
};
use proptest::prelude::*;

fn grid(dim: usize, n: usize) -> Arc<WaveGrid> {
    WaveGrid::new(dim, n, 2.0 * PI).unwrap()
}

fn field(g: &Arc<WaveGrid>, seed: u64) -> SpectralVectorField {
    SpectralVectorField::random_solenoidal(g, seed, -0.5, g.dealias_cutoff() as u32).unwrap()
}

fn grids() -> impl Strategy<Value = Arc<WaveGrid>> {
    prop_oneof![Just(grid(2, 32)), Just(grid(3, 16))]
}

fn regularized() -> impl Strategy<Value = ModelConfig> {
    (
        prop::sample::select(vec![ModelKind::Nse, ModelKind::LerayAlpha, ModelKind::LerayDeconv]),
        0.01f64..1.0,
        prop::sample::select(vec![0.25, 0.5, 1.0]),
        0u32..6,
    )
        .prop_map(|(kind, a, t, n)| ModelConfig::new(kind, 0.01, FilterParams::new(a, t, n).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn advection_is_skew(g in grids(), s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let (w, v, z) = (field(&g, s1), field(&g, s2), field(&g, s3));
        let scale = w.l2_norm() * v.l2_norm() * v.sobolev_norm(1.0);
        prop_assert!(advect(&w, &v).unwrap().inner(&v).unwrap().abs() <= 1e-11 * scale);
        let lhs = advect(&w, &v).unwrap().inner(&z).unwrap();
        let rhs = advect(&w, &z).unwrap().inner(&v).unwrap();
        let scale = w.l2_norm() * (v.l2_norm() * z.sobolev_norm(1.0) + z.l2_norm() * v.sobolev_norm(1.0));
        prop_assert!((lhs + rhs).abs() <= 1e-11 * scale);
    }

    #[test]
    fn regularized_transport_conserves_energy(g in grids(), seed in any::<u64>(), cfg in regularized()) {
        let u = field(&g, seed);
        let t = rhs(&SimState::new(0.0, u.clone()), &cfg).unwrap();
        let scale = u.l2_norm().powi(2) * u.sobolev_norm(1.0);
        prop_assert!(t.du.inner(&u).unwrap().abs() <= 1e-11 * scale);
        prop_assert!(t.du.divergence_residual() <= 1e-12 * t.du.l2_norm().max(f64::MIN_POSITIVE));
        let w = match cfg.kind {
            ModelKind::LerayAlpha => filter_apply(&u, &cfg.filter),
            _ => deconvolve(&u, &cfg.filter),
        };
        prop_assert!(advect(&w, &u).unwrap().inner(&u).unwrap().abs() <= 1e-11 * scale);
    }

    #[test]
    fn magnetic_exchange_cancels(seed in any::<u64>(), n in 0u32..4) {
        let g = grid(3, 16);
        let (u, b) = (field(&g, seed), field(&g, seed.wrapping_add(1)));
        let cfg = ModelConfig::mhd(0.02, 0.03, FilterParams::new(0.1, 0.25, n).unwrap());
        let hb = deconvolve(&b, &cfg.filter);
        let x = convective_term(&hb, &b).unwrap().inner(&u).unwrap();
        let y = convective_term(&hb, &u).unwrap().inner(&b).unwrap();
        let scale = hb.l2_norm() * (b.sobolev_norm(1.0) * u.l2_norm() + u.sobolev_norm(1.0) * b.l2_norm());
        prop_assert!((x + y).abs() <= 1e-11 * scale);

        let t = rhs(&SimState::with_magnetic(0.0, u.clone(), b.clone()), &cfg).unwrap();
        let db = t.db.unwrap();
        let total = t.du.inner(&u).unwrap() + db.inner(&b).unwrap();
        prop_assert!(total.abs() <= 1e-11 * (t.du.l2_norm() * u.l2_norm() + db.l2_norm() * b.l2_norm()));
        prop_assert!(db.divergence_residual() <= 1e-12 * db.l2_norm());
    }

    #[test]
    fn zeroth_order_deconvolution_is_leray_alpha(g in grids(), seed in any::<u64>(), a in 0.01f64..1.0) {
        let u = field(&g, seed);
        let p = FilterParams::new(a, 0.25, 0).unwrap();
        let s = SimState::new(0.0, u);
        let x = rhs(&s, &ModelConfig::new(ModelKind::LerayAlpha, 0.01, p)).unwrap();
        let y = rhs(&s, &ModelConfig::new(ModelKind::LerayDeconv, 0.01, p)).unwrap();
        prop_assert_eq!(x.du, y.du);
    }

    #[test]
    fn pressure_balances_the_gradient_part(g in grids(), seed in any::<u64>(), cfg in regularized()) {
        let u = field(&g, seed);
        let s = SimState::new(0.0, u.clone());
        let w = cfg.advecting(&u);
        let raw = convective_term(&w, &u).unwrap();
        let grad_part = raw.sub(&raw.leray_project()).unwrap();
        let grad_p = pressure_solve(&s, &cfg).unwrap().gradient();
        // -grad p balances -(w . grad) u's gradient part
        prop_assert!(grad_p.add(&grad_part).unwrap().l2_norm() <= 1e-10 * raw.l2_norm());
    }
}

#[test]
fn advection_matches_direct_convolution() {
    for (d, n) in [(3, 8), (2, 16)] {
        let g = grid(d, n);
        for seed in 0..3 {
            let (w, v) = (field(&g, seed), field(&g, seed + 100));
            let fast = advect(&w, &v).unwrap();
            let slow = direct_advection(&w, &v).unwrap();
            let err = fast.sub(&slow).unwrap().l2_norm() / slow.l2_norm();
            assert!(err <= 1e-12, "{d}D n={n}: {err}");
        }
    }
}

#[test]
fn aliasing_breaks_skew_symmetry() {
    let g = WaveGrid::with_dealias_fraction(3, 16, 2.0 * PI, 1.0).unwrap();
    let (w, v) = (field(&g, 1), field(&g, 2));
    let scale = w.l2_norm() * v.l2_norm() * v.sobolev_norm(1.0);
    let leak = advect_with(&w, &v, Dealias::Off).unwrap().inner(&v).unwrap().abs() / scale;
    assert!(leak > 1e-6, "{leak}");
}

#[test]
fn single_triad() {
    let g = grid(3, 16);
    let mut w = SpectralVectorField::zeros(&g);
    let mut v = SpectralVectorField::zeros(&g);
    let c = |re: f64, im: f64| num_complex::Complex64::new(re, im);
    // w along z with wave index (1,0,0); v along x with wave index (0,2,0)
    w.set_mode([1, 0, 0], &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    w.set_mode([-1, 0, 0], &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    v.set_mode([0, 2, 0], &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    v.set_mode([0, -2, 0], &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    // w . grad v = 0 since w only has a z component and v is independent of z
    assert!(advect(&w, &v).unwrap().max_abs() < 1e-15);
    // v . grad w: (v_x d/dx) w, nonzero on wave indices (+-1, +-2, 0)
    let out = advect(&v, &w).unwrap();
    let slow = direct_advection(&v, &w).unwrap();
    assert!(out.sub(&slow).unwrap().max_abs() < 1e-14);
    assert!(out.mode([1, 2, 0]).unwrap()[2].norm() > 0.1);
}

#[test]
fn taylor_green_tendency_is_the_forcing() {
    let g = grid(2, 32);
    let u = SpectralVectorField::taylor_green(&g, 1.0);
    let f = ForcingSpec::kolmogorov(2, 0.3, 2);
    for a in [0.0, 0.1, 1.0] {
        let cfg = ModelConfig::new(ModelKind::LerayAlpha, 0.01, FilterParams::new(a, 0.25, 0).unwrap())
            .with_forcing(f.clone());
        let t = rhs(&SimState::new(0.0, u.clone()), &cfg).unwrap();
        let expected = f.evaluate(&g, 0.0).unwrap();
        assert!(t.du.sub(&expected).unwrap().max_abs() < 1e-15);
    }
}

#[test]
fn zero_state_has_zero_tendency() {
    let g = grid(3, 16);
    let z = SpectralVectorField::zeros(&g);
    let cfg = ModelConfig::mhd(0.1, 0.1, FilterParams::new(0.1, 0.25, 2).unwrap());
    let t = rhs(&SimState::with_magnetic(0.0, z.clone(), z.clone()), &cfg).unwrap();
    assert_eq!(t.du, z);
    assert_eq!(t.db.unwrap(), z);
}

#[test]
fn taylor_green_pressure() {
    let g = grid(2, 32);
    let u = SpectralVectorField::taylor_green(&g, 1.0);
    let p = pressure_solve(&SimState::new(0.0, u), &ModelConfig::nse(0.01)).unwrap();
    let phys = p.to_physical();
    for (slot, v) in phys.iter().enumerate() {
        let x = g.point(slot);
        let exact = ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0;
        assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
    }
}

#[test]
fn subcritical_exponent_is_refused() {
    let g = grid(3, 16);
    let cfg = ModelConfig::new(ModelKind::LerayAlpha, 0.01, FilterParams::new(0.1, 0.2, 0).unwrap());
    let err = rhs(&SimState::new(0.0, field(&g, 0)), &cfg).unwrap_err();
    assert!(matches!(err, leray_core::Error::CriticalityViolation { .. }));
    let mut unsafe_cfg = cfg.clone();
    unsafe_cfg.unsafe_subcritical = true;
    assert!(rhs(&SimState::new(0.0, field(&g, 0)), &unsafe_cfg).is_ok());
}
