use proptest::prelude::*;
use zbsim::diagnostics::{center_of_mass, classify_max, zb_frequency, Phase};
use zbsim::dispersion::dispersion_exact;
use zbsim::lattice::{chain_rhs, FieldState, LatticeConfig};
use zbsim::propagator::{propagate, propagate_dynamics, relative_error, ConstantChain, ExactChain, PropagationPlan};
use zbsim::C64;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(c64(), n)
}

fn small_lattice(r: f64, omega: f64) -> LatticeConfig {
    LatticeConfig { n_guides: 8, spot_size: 17.0, gain_ratio_r: r, omega, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_is_linear(a in cvec(12), b in cvec(12), alpha in c64(), beta in c64(), sigma in c64()) {
        let mut fa = vec![C64::default(); 12];
        let mut fb = fa.clone();
        let mut fab = fa.clone();
        chain_rhs(1.3, sigma, &a, &mut fa);
        chain_rhs(1.3, sigma, &b, &mut fb);
        let ab: Vec<C64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        chain_rhs(1.3, sigma, &ab, &mut fab);
        for k in 0..12 {
            prop_assert!((fab[k] - alpha * fa[k] - beta * fb[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn propagation_is_linear(a in cvec(8), b in cvec(8), alpha in c64(), r in 0.0..1.0f64, omega in 0.0..5.0f64) {
        let cfg = small_lattice(r, omega);
        let plan = PropagationPlan { z_max: 2.0, step: 0.01, sample_every: 1, divergence_cutoff: 1e30 };
        let run = |v: &[C64]| propagate(&cfg, &plan, &FieldState::new(0.0, v.to_vec()), |_| {}).unwrap().state.amplitudes;
        let ab: Vec<C64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
        let (pa, pb, pab) = (run(&a), run(&b), run(&ab));
        let lin: Vec<C64> = pa.iter().zip(&pb).map(|(x, y)| alpha * x + y).collect();
        prop_assert!(relative_error(&pab, &lin) < 1e-12);
    }

    #[test]
    fn rk4_tracks_exact_constant_chain(a in cvec(10), kappa in 0.2..2.0f64, sigma in c64()) {
        let chain = ConstantChain { n: 10, kappa, sigma: sigma * 3.0 };
        let plan = PropagationPlan { z_max: 3.0, step: 0.002, sample_every: 1, divergence_cutoff: 1e30 };
        let s = FieldState::new(0.0, a);
        let out = propagate_dynamics(&chain, &plan, &s, s.total_intensity(), |_| {}).unwrap();
        let exact = ExactChain::new(chain).unwrap().apply(3.0, &s.amplitudes);
        prop_assert!(relative_error(&out.state.amplitudes, &exact) < 1e-8);
    }

    #[test]
    fn real_mass_evolution_is_unitary(a in cvec(16), sigma in 0.0..4.0f64, z in 0.0..50.0f64) {
        let chain = ConstantChain { n: 16, kappa: 1.0, sigma: C64::new(sigma, 0.0) };
        let out = ExactChain::new(chain).unwrap().apply(z, &a);
        let n0: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        let n1: f64 = out.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((n1 - n0).abs() < 1e-10 * n0);
    }

    /// Shifting by one unit cell commutes with evolution away from the edges.
    #[test]
    fn cell_translation_moves_center_by_two(a in cvec(6), r in 0.0..0.5f64, omega in 0.0..4.0f64) {
        let n = 80;
        let cfg = LatticeConfig { n_guides: n, spot_size: 17.0, gain_ratio_r: r, omega, ..Default::default() };
        let plan = PropagationPlan { z_max: 1.5, step: 0.005, sample_every: 1, divergence_cutoff: 1e30 };
        let place = |offset: usize| {
            let mut v = vec![C64::default(); n];
            v[offset..offset + 6].copy_from_slice(&a);
            FieldState::new(0.0, v)
        };
        let run = |s: FieldState| center_of_mass(&propagate(&cfg, &plan, &s, |_| {}).unwrap().state).unwrap();
        let c0 = run(place(36));
        let c1 = run(place(38));
        prop_assert!((c1 - c0 - 2.0).abs() < 1e-9, "{c0} {c1}");
    }

    #[test]
    fn classification_is_monotone_in_cutoff(log_max in -1.0..20.0f64, lo in 0.0..10.0f64, extra in 0.0..10.0f64) {
        let m = 10f64.powf(log_max);
        let strict = classify_max(m, 10f64.powf(lo)).phase;
        let loose = classify_max(m, 10f64.powf(lo + extra)).phase;
        if strict == Phase::PseudoPt {
            prop_assert_eq!(loose, Phase::PseudoPt);
        }
    }

    #[test]
    fn dispersion_symmetries(kappa in 0.1..3.0f64, sigma in c64(), q in -3.1..3.1f64) {
        let sigma = sigma * 4.0;
        let (p, m) = dispersion_exact(kappa, sigma, q);
        prop_assert!((p + m).norm() < 1e-14 * p.norm().max(1.0));
        let (pq, _) = dispersion_exact(kappa, sigma, -q);
        let (pr, _) = dispersion_exact(kappa, sigma, std::f64::consts::PI - q);
        prop_assert!((pq - p).norm() < 1e-12 && (pr - p).norm() < 1e-12);
        let c = 2.0 * kappa * q.cos();
        prop_assert!((p * p - sigma * sigma - c * c).norm() < 1e-12 * p.norm_sqr().max(1.0));
    }

    #[test]
    fn sinusoid_frequency_within_one_bin(f in 1.0..8.0f64, phase in 0.0..6.3f64, amp in 0.1..10.0f64, slope in -1.0..1.0f64) {
        let t: Vec<f64> = (0..1500).map(|i| i as f64 * 0.08).collect();
        let y: Vec<f64> = t.iter().map(|t| amp * (f * t + phase).sin() + slope * t).collect();
        let est = zb_frequency(&t, &y).unwrap();
        prop_assert!((est.frequency - f).abs() <= est.bin_width, "{} vs {f}", est.frequency);
    }
}

#[test]
fn hermitian_lattice_conserves_power() {
    let cfg = LatticeConfig { n_guides: 40, spot_size: 17.0, ..Default::default() };
    let plan = PropagationPlan { z_max: 40.0, step: 0.005, sample_every: 100, divergence_cutoff: 1e9 };
    let s = FieldState::new(0.0, (0..40).map(|k| C64::new((k as f64 * 0.3).sin(), 0.2)).collect());
    let e0 = s.total_intensity();
    let mut worst: f64 = 0.0;
    propagate(&cfg, &plan, &s, |st| worst = worst.max((st.total_intensity() - e0).abs() / e0)).unwrap();
    assert!(worst < 1e-9, "{worst}");
}
