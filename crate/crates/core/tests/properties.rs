mod common;

use std::f64::consts::PI;

use common::pseudo_random_state;
use lzladder::doublewell::{gs_transfer, inverse_transfer};
use lzladder::fock::{FockBasis, LadderGeometry, Leg};
use lzladder::hamiltonian::{HamiltonianParams, LadderHamiltonian};
use lzladder::observables::{leg_population, min_eigenvalue, momentum_distribution, momentum_width, MomentumGrid, OneBodyTable};
use lzladder::propagator::{evolve_step, PropagationSettings, StateVector};
use lzladder::sparse::LinearOperator;
use lzladder::thermal::{full_spectrum, mean_energy, DENSE_CAP};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_basis() -> impl Strategy<Value = FockBasis> {
    (1usize..=3, 0usize..=4, 1usize..=4).prop_filter_map("infeasible cap", |(l, n, cap)| {
        FockBasis::new(LadderGeometry::new(l).unwrap(), n, cap).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_round_trips(b in small_basis()) {
        for i in 0..b.dim() {
            prop_assert_eq!(b.index_of(&b.state_of(i)).unwrap(), i);
        }
        let again = FockBasis::new(b.geometry(), b.particles(), b.n_max()).unwrap();
        prop_assert!(again.iter().eq(b.iter()));
    }

    #[test]
    fn hamiltonian_is_symmetric_and_matches_matvec(
        b in small_basis(),
        j_par in 0.0f64..2.0,
        u in 0.0f64..5.0,
        delta in -50.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let ham = LadderHamiltonian::new(&HamiltonianParams { j_par, u, ..Default::default() }, &b).unwrap();
        let m = ham.matrix(delta);
        prop_assert_eq!(m.max_asymmetry(), 0.0);
        let x = pseudo_random_state(b.dim(), seed);
        let mut direct = vec![Complex64::new(0.0, 0.0); b.dim()];
        let mut assembled = direct.clone();
        ham.at(delta).apply(&x, &mut direct);
        m.apply(&x, &mut assembled);
        for (p, q) in direct.iter().zip(&assembled) {
            prop_assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn one_body_invariants(b in small_basis(), seed in any::<u64>()) {
        let psi = StateVector::new(pseudo_random_state(b.dim(), seed), 0.0);
        let n = b.particles() as f64;
        let n_r = leg_population(&psi, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&n_r));
        let table = OneBodyTable::new(&b);
        let grid = MomentumGrid::new(8 * b.geometry().rungs()).unwrap();
        let mut leg_total = 0.0;
        for leg in Leg::BOTH {
            let g = table.density_matrix(&psi.amplitudes, leg);
            prop_assert!((&g - g.adjoint()).norm() < 1e-12);
            prop_assert!(min_eigenvalue(&g) >= -1e-10);
            let trace = g.trace().re;
            leg_total += trace;
            let n_k = momentum_distribution(&g, &grid).unwrap();
            prop_assert!(n_k.iter().all(|&v| v >= 0.0));
            let l = b.geometry().rungs() as f64;
            prop_assert!((l / (2.0 * PI) * grid.integrate(&n_k) - trace).abs() < 1e-8 * n.max(1.0));
            if let Some(w) = momentum_width(&n_k, &grid) {
                prop_assert!((0.0..=PI * PI).contains(&w));
            }
        }
        prop_assert!((leg_total - n).abs() < 1e-10);
        prop_assert!(n == 0.0 || (leg_total - n * (1.0 - n_r) - n * n_r).abs() < 1e-10);
    }

    #[test]
    fn evolution_is_unitary(b in small_basis(), delta in -20.0f64..20.0, dt in 0.0f64..0.5, seed in any::<u64>()) {
        let ham = LadderHamiltonian::new(&HamiltonianParams::default(), &b).unwrap();
        let psi = StateVector::new(pseudo_random_state(b.dim(), seed), 0.0);
        let out = evolve_step(&psi, &ham.at(delta), dt, &PropagationSettings::default()).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        let e0 = ham.energy(&psi.amplitudes, delta);
        let e1 = ham.energy(&out.amplitudes, delta);
        prop_assert!((e0 - e1).abs() < 1e-8 * e0.abs().max(1.0));
    }

    #[test]
    fn thermal_energy_decreases_with_beta(delta in -5.0f64..5.0, b1 in -20.0f64..20.0, b2 in -20.0f64..20.0) {
        let b = FockBasis::new(LadderGeometry::new(2).unwrap(), 2, 2).unwrap();
        let ham = LadderHamiltonian::new(&HamiltonianParams::default(), &b).unwrap();
        let spec = full_spectrum(&ham.matrix(delta), DENSE_CAP).unwrap();
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(mean_energy(&spec, hi).unwrap() <= mean_energy(&spec, lo).unwrap() + 1e-12);
    }

    #[test]
    fn closed_forms_are_probabilities(n in 1usize..=5, x in 0.01f64..50.0, u in 0.5f64..30.0) {
        let a = 2.0 * PI / x;
        let gs = gs_transfer(n, a).unwrap();
        let inv = inverse_transfer(n, a, u).unwrap();
        prop_assert!((0.0..=1.0).contains(&gs));
        prop_assert!((0.0..=1.0).contains(&inv));
    }
}
