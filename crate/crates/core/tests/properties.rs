use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::galerkin::{
    energy, hamiltonian, random_spectrum, triad_numerator, CouplingTensor, Galerkin, GalerkinState, Integrator,
};
use sqg_core::grid::QuadGrid;
use sqg_core::heat::{kernel_eval, KernelMethod};
use sqg_core::spectral::analyze;

fn basis(n: usize) -> Arc<EigenBasis> {
    Arc::new(EigenBasis::new(n))
}

#[test]
fn hamiltonian_flux_vanishes_for_ten_seeds() {
    let b = basis(20);
    let tensor = CouplingTensor::closed_form(b.clone(), 20);
    for seed in 0..10 {
        let theta = random_spectrum(&b, 20, seed, 1.0);
        let rhs = tensor.rhs(theta.coeffs());
        let inv = theta.frac_apply(-1.0);
        let flux: f64 = rhs.iter().zip(inv.coeffs()).map(|(r, t)| r * t).sum();
        let scale: f64 = rhs.iter().zip(inv.coeffs()).map(|(r, t)| (r * t).abs()).sum();
        assert!(flux.abs() <= 1e-14 * scale.max(1e-300), "seed {seed}: {flux:e} vs {scale:e}");
    }
}

#[test]
fn midpoint_step_keeps_both_invariants() {
    let b = basis(24);
    let solver = Galerkin::new(CouplingTensor::closed_form(b.clone(), 24), Integrator::ImplicitMidpoint);
    let state = GalerkinState::new(random_spectrum(&b, 24, 5, 0.5));
    let next = solver.step(&state, 0.05).unwrap();
    let (e0, e1) = (energy(state.theta.coeffs()), energy(next.theta.coeffs()));
    let (h0, h1) = (hamiltonian(&b, state.theta.coeffs()), hamiltonian(&b, next.theta.coeffs()));
    assert!((e1 - e0).abs() < 1e-12 * e0);
    assert!((h1 - h0).abs() < 1e-12 * h0);
    assert_ne!(state.theta.coeffs(), next.theta.coeffs());
}

#[test]
fn tensor_prefix_is_stable_under_truncation() {
    let b = basis(30);
    let small = CouplingTensor::closed_form(b.clone(), 12);
    let large = CouplingTensor::closed_form(b, 30);
    for (j, k, l, g) in small.entries() {
        assert_eq!(large.gamma(j, k, l), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triad_numerator_is_antisymmetric(j in 0usize..200, k in 0usize..200, l in 0usize..200) {
        let b = EigenBasis::new(200);
        let (wj, wk, wl) = (b.mode(j), b.mode(k), b.mode(l));
        prop_assert_eq!(triad_numerator(wj, wk, wl), -triad_numerator(wj, wl, wk));
        prop_assert_eq!(triad_numerator(wj, wk, wl), -triad_numerator(wk, wj, wl));
        prop_assert_eq!(triad_numerator(wj, wk, wk), 0);
    }

    #[test]
    fn position_inverts_mode(n in 1usize..500, i in 0usize..500) {
        let b = EigenBasis::new(n);
        let i = i % n;
        let m = b.mode(i);
        prop_assert_eq!(b.position(m.p, m.q), Some(i));
        prop_assert_eq!(m.eigenvalue_int(), (m.p * m.p + m.q * m.q) as u64);
    }

    #[test]
    fn synthesis_then_analysis_is_identity(seed in any::<u64>(), len in 1usize..60, beta in 0.0f64..1.5) {
        let b = basis(len);
        let f = random_spectrum(&b, len, seed, beta);
        let grid = QuadGrid::for_bandwidth(2 * b.max_frequency() + 2);
        let samples = f.synthesize_on(&grid);
        let back = analyze(&grid, &samples, b, len);
        prop_assert!(back.warnings.is_empty());
        let err = back.field.difference(&f).l2_norm();
        prop_assert!(err <= 1e-13 * f.l2_norm().max(1.0), "err {:e}", err);
    }

    #[test]
    fn fractional_powers_are_self_adjoint(seed in any::<u64>(), s in -1.5f64..1.5) {
        let b = basis(40);
        let f = random_spectrum(&b, 40, seed, 0.5);
        let g = random_spectrum(&b, 40, seed.wrapping_add(7), 0.5);
        let lhs = f.frac_apply(s).dot(&g);
        let rhs = f.dot(&g.frac_apply(s));
        let scale = f.frac_apply(s).l2_norm() * g.l2_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale);
    }

    #[test]
    fn image_kernel_is_symmetric_and_positive(
        x in (0.05f64..PI - 0.05, 0.05f64..PI - 0.05),
        y in (0.05f64..PI - 0.05, 0.05f64..PI - 0.05),
        t in 0.02f64..2.0,
    ) {
        let pairs = [([x.0, x.1], [y.0, y.1]), ([y.0, y.1], [x.0, x.1])];
        let h = kernel_eval(&pairs, t, KernelMethod::ImageSeries, None).unwrap();
        let (a, b) = (h.values[0].value, h.values[1].value);
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-13 * a);
        prop_assert!(a <= 1.0 / (4.0 * PI * t) * (1.0 + 1e-12));
    }
}
