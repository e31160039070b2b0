use std::f64::consts::PI;
use std::sync::Arc;

use leray_core::{
    energy_budget_residual, run, step, EnergyRecord, FilterParams, ForcingSpec, ModelConfig, ModelKind, Scheme,
    SimState, SpectralVectorField, StepperConfig, WaveGrid,
};
use proptest::prelude::*;

fn grid(dim: usize, n: usize) -> Arc<WaveGrid> {
    WaveGrid::new(dim, n, 2.0 * PI).unwrap()
}

fn unit_field(g: &Arc<WaveGrid>, seed: u64, cutoff: u32) -> SpectralVectorField {
    let u = SpectralVectorField::random_solenoidal(g, seed, -1.0, cutoff).unwrap();
    u.scale(1.0 / u.l2_norm())
}

fn trajectory(initial: &SimState, cfg: &ModelConfig, sc: &StepperConfig) -> (SimState, Vec<EnergyRecord>) {
    let mut records = Vec::new();
    let last = run(initial, cfg, sc, |_, r| records.push(r.clone())).unwrap();
    (last, records)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unforced_energy_never_increases(
        seed in any::<u64>(),
        kind in prop::sample::select(ModelKind::ALL.to_vec()),
        alpha in 0.0f64..0.5,
        n in 0u32..4,
    ) {
        let g = grid(3, 16);
        let p = FilterParams::new(alpha, 0.25, n).unwrap();
        let cfg = match kind {
            ModelKind::MhdDeconv => ModelConfig::mhd(0.01, 0.02, p),
            k => ModelConfig::new(k, 0.01, p),
        };
        let u = unit_field(&g, seed, 5);
        let state = match kind {
            ModelKind::MhdDeconv => SimState::with_magnetic(0.0, u, unit_field(&g, seed ^ 1, 5)),
            _ => SimState::new(0.0, u),
        };
        let sc = StepperConfig::new(2e-3, 0.04);
        let (_, recs) = trajectory(&state, &cfg, &sc);
        prop_assert_eq!(recs.len(), 21);
        for w in recs.windows(2) {
            prop_assert!(w[1].total_energy() <= w[0].total_energy(), "{} -> {}", w[0].total_energy(), w[1].total_energy());
        }
    }

    #[test]
    fn symmetry_and_divergence_are_kept(seed in any::<u64>()) {
        let g = grid(2, 32);
        let cfg = ModelConfig::new(ModelKind::LerayDeconv, 0.005, FilterParams::new(0.1, 0.5, 3).unwrap())
            .with_forcing(ForcingSpec::kolmogorov(2, 0.5, 3));
        let u = unit_field(&g, seed, 10);
        let start = u.hermitian_residue();
        let sc = StepperConfig::new(1e-3, 0.05).with_sample_every(5);
        let mut worst: f64 = 0.0;
        let mut div: f64 = 0.0;
        run(&SimState::new(0.0, u), &cfg, &sc, |s, _| {
            worst = worst.max(s.u.hermitian_residue());
            div = div.max(s.u.divergence_residual());
        }).unwrap();
        prop_assert!(worst <= start.max(1e-15), "{}", worst);
        prop_assert!(div <= 1e-13, "{}", div);
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let g = grid(3, 16);
    let cfg = ModelConfig::nse(0.05).with_forcing(ForcingSpec::abc(1.0, 0.7, 0.4, 0.5));
    let u0 = unit_field(&g, 9, 4).scale(2.0);
    let s0 = SimState::new(0.0, u0);
    let t_end = 0.4;
    let at = |dt: f64| trajectory(&s0, &cfg, &StepperConfig::new(dt, t_end).with_sample_every(1000)).0.u;
    let coarse = 0.04;
    let reference = at(coarse / 8.0);
    let e1 = at(coarse).sub(&reference).unwrap().l2_norm();
    let e2 = at(coarse / 2.0).sub(&reference).unwrap().l2_norm();
    let ratio = e1 / e2;
    assert!((ratio / 16.0 - 1.0).abs() < 0.3, "{e1:.3e} / {e2:.3e} = {ratio}");
}

#[test]
fn linear_decay_is_exact_for_large_steps() {
    let g = grid(2, 32);
    let nu = 0.1;
    let u = SpectralVectorField::taylor_green(&g, 1.0);
    for model in [ModelConfig::nse(nu), ModelConfig::new(ModelKind::LerayAlpha, nu, FilterParams::new(0.3, 0.5, 0).unwrap())] {
        let mut s = SimState::new(0.0, u.clone());
        let sc = StepperConfig::new(0.5, 5.0);
        for _ in 0..10 {
            s = step(&s, &model, &sc).unwrap();
        }
        let exact = u.scale((-2.0 * nu * 5.0f64).exp());
        assert!(s.u.sub(&exact).unwrap().max_abs() <= 1e-15);
        assert!((s.t - 5.0).abs() < 1e-12);
    }
}

#[test]
fn zero_state_stays_zero() {
    let g = grid(3, 16);
    let z = SpectralVectorField::zeros(&g);
    let cfg = ModelConfig::new(ModelKind::LerayDeconv, 0.1, FilterParams::new(0.2, 0.25, 2).unwrap());
    let (last, _) = trajectory(&SimState::new(0.0, z.clone()), &cfg, &StepperConfig::new(0.01, 0.1));
    assert_eq!(last.u, z);
}

fn taylor_green_budget(dt: f64) -> f64 {
    let g = grid(2, 32);
    let cfg = ModelConfig::new(ModelKind::LerayAlpha, 0.1, FilterParams::new(0.2, 0.25, 0).unwrap());
    let sc = StepperConfig::new(dt, 0.05);
    let (_, recs) = trajectory(&SimState::new(0.0, SpectralVectorField::taylor_green(&g, 1.0)), &cfg, &sc);
    energy_budget_residual(&recs, &cfg).unwrap()
}

#[test]
fn taylor_green_energy_budget() {
    let coarse = taylor_green_budget(1e-3);
    let fine = taylor_green_budget(5e-4);
    assert!(coarse < 1e-6, "{coarse}");
    assert!((coarse / fine / 4.0 - 1.0).abs() < 0.3, "{coarse:.3e} / {fine:.3e}");
}

#[test]
fn zeroth_order_deconvolution_tracks_leray_alpha() {
    let g = grid(3, 16);
    let p = FilterParams::new(0.15, 0.25, 0).unwrap();
    let s0 = SimState::new(0.0, unit_field(&g, 21, 5));
    let sc = StepperConfig::new(1e-3, 0.03);
    let (a, _) = trajectory(&s0, &ModelConfig::new(ModelKind::LerayAlpha, 0.02, p), &sc);
    let (b, _) = trajectory(&s0, &ModelConfig::new(ModelKind::LerayDeconv, 0.02, p), &sc);
    assert!(a.u.sub(&b.u).unwrap().max_abs() <= 1e-13);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let g = grid(3, 16);
    let cfg = ModelConfig::new(ModelKind::LerayDeconv, 0.02, FilterParams::new(0.1, 0.25, 2).unwrap())
        .with_forcing(ForcingSpec::abc(1.0, 1.0, 1.0, 0.1));
    let s0 = SimState::new(0.0, unit_field(&g, 5, 5));
    let sc = StepperConfig::new(1e-3, 0.02).with_sample_every(4);
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| trajectory(&s0, &cfg, &sc))
    };
    let (a, ra) = go(1);
    let (b, rb) = go(4);
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

#[test]
fn euler_scheme_runs() {
    let g = grid(2, 32);
    let cfg = ModelConfig::nse(0.1);
    let u = SpectralVectorField::taylor_green(&g, 1.0);
    let sc = StepperConfig::new(0.01, 0.1).with_scheme(Scheme::IfEuler);
    let (last, recs) = trajectory(&SimState::new(0.0, u.clone()), &cfg, &sc);
    assert_eq!(recs.len(), 11);
    assert!(last.u.sub(&u.scale((-0.02f64).exp())).unwrap().max_abs() < 1e-14);
}
