//! Randomized structural properties of the closed forms and the grid engine.

use nalgebra::DVector;
use proptest::prelude::*;

use condmeas::detector::{DetectorGrid, DetectorState};
use condmeas::hilbert::{self, StateDiagnostics, SystemOperator, SystemState};
use condmeas::vonneumann::{conditioned_averages_grid, CouplingConfig, GridOracle};
use condmeas::weakvalue::{hg_closed_forms, superposition_reduced_state, system_weak_value};
use condmeas::{CMatrix, C64};

fn matrix(d: usize, entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        let (re, im) = entries[i * d + j];
        C64::new(re, im)
    })
}

fn hermitian(d: usize, entries: &[(f64, f64)]) -> SystemOperator {
    let m = matrix(d, entries);
    SystemOperator::hermitian((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

fn state(d: usize, entries: &[(f64, f64)]) -> SystemState {
    let m = matrix(d, entries);
    let rho = &m * m.adjoint() + CMatrix::identity(d, d) * C64::new(1e-3, 0.0);
    let tr = hilbert::trace(&rho).re;
    SystemState::new(rho / C64::new(tr, 0.0)).unwrap()
}

fn projector(entries: &[(f64, f64)]) -> SystemOperator {
    let v = DVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| C64::new(re, im)));
    SystemOperator::projector(&v).unwrap()
}

fn unitary(d: usize, entries: &[(f64, f64)]) -> CMatrix {
    let (_, v) = hilbert::eigh(hermitian(d, entries).matrix());
    v
}

fn conj(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

/// A system dimension together with enough random entries for several matrices.
fn system() -> impl Strategy<Value = (usize, Vec<(f64, f64)>)> {
    (2usize..=3).prop_flat_map(|d| (Just(d), entries(4 * d * d + d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_state_is_a_density_matrix((d, e) in system(), g in 0.0..8.0f64, mode in 0usize..=4) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let hg = hg_closed_forms(&rho, &a, g, 1.3, mode, &SystemOperator::identity(d), 1.0).unwrap();
        prop_assert!(StateDiagnostics::of(hg.reduced.matrix()).passes(1e-10, 1e-10, -1e-10));
        // Populations in the eigenbasis of A are untouched.
        let (_, v) = hilbert::eigh(a.matrix());
        let before = hilbert::to_basis(rho.matrix(), &v);
        let after = hilbert::to_basis(hg.reduced.matrix(), &v);
        for k in 0..d {
            prop_assert!((before[(k, k)] - after[(k, k)]).norm() < 1e-12);
        }
    }

    #[test]
    fn conditioned_averages_are_basis_independent((d, e) in system(), g in 0.0..4.0f64, mode in 0usize..=2) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let post = projector(&e[4 * n..4 * n + d]);
        let u = unitary(d, &e[2 * n..3 * n]);
        let base = hg_closed_forms(&rho, &a, g, 1.0, mode, &post, 1.0);
        prop_assume!(base.as_ref().map(|b| b.prob_f > 1e-6).unwrap_or(false));
        let base = base.unwrap();
        let rotated = hg_closed_forms(
            &SystemState::new(conj(&u, rho.matrix())).unwrap(),
            &SystemOperator::hermitian(conj(&u, a.matrix())).unwrap(),
            g,
            1.0,
            mode,
            &SystemOperator::hermitian(conj(&u, post.matrix())).unwrap(),
            1.0,
        )
        .unwrap();
        let scale = base.mean_x.abs().max(base.mean_p.abs()).max(1.0);
        prop_assert!((base.mean_x - rotated.mean_x).abs() < 1e-9 * scale);
        prop_assert!((base.mean_p - rotated.mean_p).abs() < 1e-9 * scale);
        prop_assert!((base.prob_f - rotated.prob_f).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_is_linear_in_the_input((d, e) in system(), g in 0.0..5.0f64, mode in 0usize..=3, w in 0.0..1.0f64) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let r1 = state(d, &e[n..2 * n]);
        let r2 = state(d, &e[2 * n..3 * n]);
        let mix = SystemState::new(r1.matrix() * C64::new(w, 0.0) + r2.matrix() * C64::new(1.0 - w, 0.0)).unwrap();
        let id = SystemOperator::identity(d);
        let out = |r: &SystemState| hg_closed_forms(r, &a, g, 1.0, mode, &id, 1.0).unwrap().reduced.matrix().clone();
        let expected = out(&r1) * C64::new(w, 0.0) + out(&r2) * C64::new(1.0 - w, 0.0);
        prop_assert!(max_abs(&(out(&mix) - expected)) < 1e-12);
    }

    #[test]
    fn reversing_the_coupling_reverses_the_pointer((d, e) in system(), g in 0.01..4.0f64, mode in 0usize..=3) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let post = projector(&e[4 * n..4 * n + d]);
        let plus = hg_closed_forms(&rho, &a, g, 1.0, mode, &post, 1.0);
        prop_assume!(plus.as_ref().map(|b| b.prob_f > 1e-6).unwrap_or(false));
        let plus = plus.unwrap();
        let minus = hg_closed_forms(&rho, &a, -g, 1.0, mode, &post, 1.0).unwrap();
        let scale = plus.mean_x.abs().max(plus.mean_p.abs()).max(1.0);
        prop_assert!((plus.mean_x + minus.mean_x).abs() < 1e-12 * scale);
        prop_assert!((plus.mean_p + minus.mean_p).abs() < 1e-12 * scale);
        prop_assert!(max_abs(&(plus.reduced.matrix() - minus.reduced.matrix())) < 1e-14);
    }

    #[test]
    fn zero_coupling_leaves_the_system_alone((d, e) in system(), mode in 0usize..=5) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let id = SystemOperator::identity(d);
        let hg = hg_closed_forms(&rho, &a, 0.0, 1.0, mode, &id, 1.0).unwrap();
        prop_assert!(max_abs(&(hg.reduced.matrix() - rho.matrix())) < 1e-14);
        prop_assert_eq!(hg.mean_x, 0.0);
        prop_assert_eq!(hg.mean_p, 0.0);
    }

    #[test]
    fn unit_postselection_gives_the_expectation((d, e) in system(), g in 0.0..5.0f64, mode in 0usize..=3) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let hg = hg_closed_forms(&rho, &a, g, 1.0, mode, &SystemOperator::identity(d), 1.0).unwrap();
        let expectation = hilbert::trace(&(a.matrix() * rho.matrix()));
        prop_assert!((hg.a_w.value - expectation).norm() < 1e-12);
        prop_assert!((hg.prob_f - 1.0).abs() < 1e-12);
        prop_assert!(hg.mean_p.abs() < 1e-12);
        let direct = system_weak_value(&SystemOperator::identity(d), &a, &rho).unwrap();
        prop_assert!((direct.value - expectation).norm() < 1e-12);
    }

    #[test]
    fn superposition_state_is_a_density_matrix(
        (d, e) in system(),
        g in -5.0..5.0f64,
        c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=4),
    ) {
        let norm: f64 = c.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let coeffs: Vec<C64> = c.iter().map(|&(re, im)| C64::new(re / norm, im / norm)).collect();
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let out = superposition_reduced_state(&rho, &a, g, 1.0, &coeffs).unwrap();
        prop_assert!(StateDiagnostics::of(out.matrix()).passes(1e-10, 1e-10, -1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_and_closed_forms_agree((d, e) in system(), ratio in 0.0..3.0f64, mode in 0usize..=2) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let post = projector(&e[4 * n..4 * n + d]);
        let sigma = 1.0;
        let g = ratio * sigma;
        let hg = hg_closed_forms(&rho, &a, g, sigma, mode, &post, 1.0);
        prop_assume!(hg.as_ref().map(|b| b.prob_f > 1e-3).unwrap_or(false));
        let hg = hg.unwrap();
        let cfg = CouplingConfig::new(g, a.clone()).unwrap();
        let grid = DetectorGrid::for_coupling(1024, sigma, g, cfg.max_shift(), 1.0).unwrap();
        let det = DetectorState::hermite_gauss(&grid, sigma, mode).unwrap();
        let avg = conditioned_averages_grid(&rho, &det, &cfg, &post, 1).unwrap();
        prop_assert!((avg.prob_f - hg.prob_f).abs() < 1e-9);
        prop_assert!((avg.mean_x - hg.mean_x).abs() < 1e-7 * hg.mean_x.abs().max(1.0));
        prop_assert!((avg.mean_p - hg.mean_p).abs() < 1e-7 * hg.mean_p.abs().max(1.0));
    }

    #[test]
    fn reflecting_coupling_and_observable_preserves_moments((d, e) in system(), ratio in 0.1..3.0f64, mode in 0usize..=2) {
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let neg = SystemOperator::hermitian(-a.matrix()).unwrap();
        let rho = state(d, &e[n..2 * n]);
        let post = projector(&e[4 * n..4 * n + d]);
        let g = ratio;
        let cfg = CouplingConfig::new(g, a.clone()).unwrap();
        let grid = DetectorGrid::for_coupling(1024, 1.0, g, cfg.max_shift(), 1.0).unwrap();
        let det = DetectorState::hermite_gauss(&grid, 1.0, mode).unwrap();
        let plus = conditioned_averages_grid(&rho, &det, &cfg, &post, 2);
        prop_assume!(plus.as_ref().map(|p| p.prob_f > 1e-3).unwrap_or(false));
        let plus = plus.unwrap();
        let minus = conditioned_averages_grid(&rho, &det, &CouplingConfig::new(-g, neg).unwrap(), &post, 2).unwrap();
        for (x, y) in plus.moments_x.iter().chain(&plus.moments_p).zip(minus.moments_x.iter().chain(&minus.moments_p)) {
            prop_assert!((x - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn superposition_closed_form_matches_grid_for_either_sign(
        (d, e) in system(),
        g in -3.0..3.0f64,
        c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..=3),
    ) {
        let norm: f64 = c.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-2);
        let coeffs: Vec<C64> = c.iter().map(|&(re, im)| C64::new(re / norm, im / norm)).collect();
        let n = d * d;
        let a = hermitian(d, &e[..n]);
        let rho = state(d, &e[n..2 * n]);
        let cfg = CouplingConfig::new(g, a.clone()).unwrap();
        let grid = DetectorGrid::for_coupling(1024, 1.0, g, cfg.max_shift(), 1.0).unwrap();
        let det = DetectorState::superposition(&grid, 1.0, coeffs.clone()).unwrap();
        let traced = GridOracle::new(&rho, &det, &cfg, &SystemOperator::identity(d)).unwrap().reduced_state().unwrap();
        let closed = superposition_reduced_state(&rho, &a, g, 1.0, &coeffs).unwrap();
        prop_assert!(max_abs(&(closed.matrix() - traced.matrix())) < 1e-9);
    }
}
