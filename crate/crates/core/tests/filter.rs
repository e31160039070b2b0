use std::f64::consts::PI;
use std::sync::Arc;

use leray_core::diagnostics::{alpha_sweep_with, n_sweep};
use leray_core::filter::{helmholtz_apply, van_cittert_series};
use leray_core::{deconvolution_gain, deconvolve, filter_apply, FilterParams, SpectralVectorField, WaveGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(dim: usize, n: usize) -> Arc<WaveGrid> {
    WaveGrid::new(dim, n, 2.0 * PI).unwrap()
}

fn field(g: &Arc<WaveGrid>, seed: u64) -> SpectralVectorField {
    SpectralVectorField::random_solenoidal(g, seed, -0.5, g.dealias_cutoff() as u32).unwrap()
}

fn params() -> impl Strategy<Value = FilterParams> {
    (1e-3f64..1.0, prop::sample::select(vec![0.25, 0.5, 1.0]), 0u32..12)
        .prop_map(|(a, t, n)| FilterParams::new(a, t, n).unwrap())
}

fn grids() -> impl Strategy<Value = Arc<WaveGrid>> {
    prop_oneof![Just(grid(2, 32)), Just(grid(3, 16))]
}

/// Field supported on the modes `a` and `-a`, 3D only.
fn single_mode(g: &Arc<WaveGrid>, a: [i32; 3]) -> SpectralVectorField {
    let k = a.map(|x| x as f64);
    let e = if a[0] == 0 && a[1] == 0 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let dir = [k[1] * e[2] - k[2] * e[1], k[2] * e[0] - k[0] * e[2], k[0] * e[1] - k[1] * e[0]];
    let c = Complex64::new(1.0, 0.5);
    let v: Vec<Complex64> = dir.iter().map(|d| c * d).collect();
    let conj: Vec<Complex64> = v.iter().map(|c| c.conj()).collect();
    let mut u = SpectralVectorField::zeros(g);
    u.set_mode(a, &v).unwrap();
    u.set_mode([-a[0], -a[1], -a[2]], &conj).unwrap();
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn filter_smoothing_bounds(g in grids(), seed in any::<u64>(), p in params()) {
        let u = field(&g, seed);
        let bar = filter_apply(&u, &p);
        for s in [-1.0, 0.0, 0.5, 1.0] {
            for beta in [0.0, p.theta, 2.0 * p.theta] {
                let lhs = bar.sobolev_norm(s + beta);
                let rhs = p.alpha.powf(-beta) * u.sobolev_norm(s);
                prop_assert!(lhs <= rhs * (1.0 + 1e-12), "s {} beta {}: {} > {}", s, beta, lhs, rhs);
            }
        }
    }

    #[test]
    fn filter_inverts_helmholtz(g in grids(), seed in any::<u64>(), p in params()) {
        let u = field(&g, seed);
        let back = filter_apply(&helmholtz_apply(&u, &p), &p);
        prop_assert!(back.sub(&u).unwrap().l2_norm() <= 1e-14 * u.l2_norm());
        prop_assert!(filter_apply(&u, &p).divergence_residual() <= 1e-13);
    }

    #[test]
    fn deconvolution_is_a_contraction(g in grids(), seed in any::<u64>(), p in params()) {
        let u = field(&g, seed);
        let h = deconvolve(&u, &p);
        for s in [-1.0, 0.0, 0.5, 1.0] {
            prop_assert!(h.sobolev_norm(s) <= u.sobolev_norm(s) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn gain_is_monotone_in_order(k in 0.5f64..50.0, p in params()) {
        let lo = deconvolution_gain(k, &p);
        let hi = deconvolution_gain(k, &p.with_order(p.n_deconv + 1));
        prop_assert!(lo > 0.0 && hi <= 1.0);
        prop_assert!(hi > lo || hi == 1.0, "{} {}", lo, hi);
    }

    #[test]
    fn zeroth_order_is_the_filter(g in grids(), seed in any::<u64>(), p in params()) {
        let u = field(&g, seed);
        let p0 = p.with_order(0);
        prop_assert_eq!(deconvolve(&u, &p0), filter_apply(&u, &p0));
    }

    #[test]
    fn series_matches_closed_form(seed in any::<u64>(), p in params()) {
        let g = grid(3, 16);
        let u = field(&g, seed);
        let p = p.with_order(p.n_deconv.min(8));
        let a = deconvolve(&u, &p);
        let b = van_cittert_series(&u, &p);
        prop_assert!(a.sub(&b).unwrap().sobolev_norm(1.0) <= 1e-12 * a.sobolev_norm(1.0));
    }

    #[test]
    fn single_shell_ratio_is_exact(
        p in params(),
        a in prop::sample::select(vec![[1, 0, 0], [2, 1, 0], [3, 2, 1], [4, 4, 2]]),
    ) {
        let g = grid(3, 16);
        let u = single_mode(&g, a);
        let k0 = ((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) as f64).sqrt();
        let expected = p.defect_ratio(k0);
        let orders: Vec<u32> = (0..=6).collect();
        let report = n_sweep(&u, &p, &orders, 0.0).unwrap();
        // below ~1e-4 the subtraction H_N u - u itself loses digits
        let floor = 1e-4 * u.l2_norm();
        for w in report.errors.windows(2) {
            if w[1] > floor {
                prop_assert!((w[1] / w[0] / expected - 1.0).abs() < 1e-10);
            }
        }
        for (n, e) in orders.iter().zip(&report.errors) {
            let exact = expected.powi(*n as i32 + 1) * u.l2_norm();
            prop_assert!((e - exact).abs() <= 1e-12 * u.l2_norm());
        }
    }
}

#[test]
fn filter_bound_with_critical_exponent() {
    let g = grid(3, 16);
    for seed in 0..100 {
        let u = field(&g, seed);
        for alpha in [0.01, 0.1, 1.0] {
            let p = FilterParams::new(alpha, 0.25, 0).unwrap();
            let lhs = filter_apply(&u, &p).sobolev_norm(0.5);
            assert!(lhs <= alpha.powf(-0.5) * u.sobolev_norm(0.0) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn contraction_is_sharp_on_the_lowest_shell() {
    let g = grid(3, 16);
    let u = single_mode(&g, [1, 0, 0]);
    for s in [-1.0, 0.0, 0.5, 1.0] {
        let p = FilterParams::new(1e-6, 0.25, 2).unwrap();
        let ratio = deconvolve(&u, &p).sobolev_norm(s) / u.sobolev_norm(s);
        assert!(ratio > 0.99 && ratio <= 1.0, "{ratio}");
    }
}

#[test]
fn unit_values() {
    let p = FilterParams::new(1.0, 0.25, 0).unwrap();
    assert_eq!(deconvolution_gain(1.0, &p), 0.5);
    assert!((deconvolution_gain(1.0, &p.with_order(1)) - 0.75).abs() < 1e-15);
    let p = FilterParams::new(16.0, 0.25, 0).unwrap();
    assert_eq!(leray_core::helmholtz_multiplier(16.0, &p), 17.0);
    let g = grid(3, 8);
    let u = single_mode(&g, [1, 0, 0]);
    let bar = filter_apply(&u, &FilterParams::new(1.0, 0.25, 0).unwrap());
    assert_eq!(bar, u.scale(0.5));
    let id = FilterParams::new(0.0, 0.5, 5).unwrap();
    assert_eq!(deconvolve(&u, &id), u);
}

#[test]
fn alpha_rate_on_band_limited_fields() {
    let g = grid(3, 16);
    let u = SpectralVectorField::random_solenoidal(&g, 11, -1.0, 4).unwrap();
    for theta in [0.25, 0.5] {
        let p = FilterParams::new(0.1, theta, 0).unwrap();
        let r = alpha_sweep_with(&u, &p, &[1e-4, 5e-5, 2.5e-5], 0.0, 2.0 * theta, 0.05).unwrap();
        let slope = r.fitted.unwrap();
        assert!((slope - 2.0 * theta).abs() < 0.05, "theta {theta}: {slope}");
        // normalized error approaches the fractional Laplacian norm
        let limit = u.fractional_laplacian(theta).sobolev_norm(0.0);
        let last = r.errors.last().unwrap() / 2.5e-5f64.powf(2.0 * theta);
        assert!((last / limit - 1.0).abs() < 0.05, "{last} vs {limit}");
    }
}

#[test]
fn sweep_errors_follow_the_closed_form() {
    let g = grid(3, 16);
    let u = field(&g, 4);
    let p = FilterParams::new(0.2, 0.5, 0).unwrap();
    let alphas = [0.2, 0.1, 0.05];
    let r = alpha_sweep_with(&u, &p, &alphas, 0.0, 1.0, 0.5).unwrap();
    for (a, e) in alphas.iter().zip(&r.errors) {
        let pa = p.with_alpha(*a);
        let exact = u.scaled_by(|s| pa.defect_ratio(g.k_mag(s))).sobolev_norm(0.0);
        assert!((e - exact).abs() <= 1e-12 * exact, "{e} vs {exact}");
    }
}
