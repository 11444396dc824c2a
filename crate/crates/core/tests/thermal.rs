use std::f64::consts::PI;

use lzladder::fock::{FockBasis, LadderGeometry};
use lzladder::hamiltonian::HamiltonianParams;
use lzladder::protocols::Ladder;
use lzladder::thermal::{ideal_gas_energy, ideal_gas_reference, quench_energies, thermal_curve, ThermalOptions};

fn ladder_basis(n: usize) -> FockBasis {
    FockBasis::new(LadderGeometry::new(4).unwrap(), n, FockBasis::default_cap(n)).unwrap()
}

fn matched_betas(n: usize, u: f64, multiples: &[f64]) -> Vec<f64> {
    let b = ladder_basis(n);
    let params = HamiltonianParams { u, ..Default::default() };
    let ladder = Ladder::prepare(&params, &b, 0, 1e-10).unwrap();
    let deltas: Vec<f64> = multiples.iter().map(|m| m * params.j_par).collect();
    let energies = quench_energies(&ladder.ham, &ladder.initial, &deltas);
    thermal_curve(&params, &b, &deltas, &energies, &ThermalOptions::default())
        .unwrap()
        .into_iter()
        .map(|row| row.result.unwrap().beta)
        .collect()
}

#[test]
fn matched_beta_changes_sign_near_minus_four() {
    for n in [4, 5] {
        for u in [1.0, 1.58] {
            let b = matched_betas(n, u, &[-3.0, -5.0]);
            assert!(b[0] > 0.0 && b[1] < 0.0, "N={n} U={u}: {b:?}");
        }
    }
}

#[test]
fn matched_beta_falls_monotonically_with_the_quench_depth() {
    let b = matched_betas(4, 1.58, &[0.0, -1.0, -2.0, -3.0, -4.0, -5.0, -6.0]);
    assert!(b.windows(2).all(|w| w[1] < w[0]), "{b:?}");
}

#[test]
fn ideal_gas_differs_from_the_interacting_gas_near_zero_bias() {
    // At four rungs the leg populations of the two ensembles stay within a few
    // percent; the momentum widths separate clearly.
    let n = 4;
    let b = ladder_basis(n);
    let params = HamiltonianParams::default();
    let ladder = Ladder::prepare(&params, &b, 0, 1e-10).unwrap();
    let deltas: Vec<f64> = [2.0, 1.0, 0.0, -1.0].iter().map(|m| m * params.j_par).collect();
    let energies = quench_energies(&ladder.ham, &ladder.initial, &deltas);
    let interacting = thermal_curve(&params, &b, &deltas, &energies, &ThermalOptions::default()).unwrap();
    let ideal = ideal_gas_reference(&params, b.geometry(), n, &deltas, ideal_gas_energy(&params, n));
    assert!(ideal.iter().all(|g| g.converged));
    let gaps: Vec<f64> = interacting.iter().zip(&ideal).map(|(i, g)| i.result.as_ref().unwrap().k2_l - g.k2_l).collect();
    assert!(gaps.iter().filter(|&&g| g > 0.1).count() >= 3, "{gaps:?}");
    assert!((interacting[2].result.as_ref().unwrap().n_r - ideal[2].n_r).abs() < 1e-10);
}

#[test]
fn infinite_temperature_gives_flat_values() {
    let b = ladder_basis(3);
    let params = HamiltonianParams::default();
    let ladder = Ladder::prepare(&params, &b, 0, 1e-10).unwrap();
    let spec = lzladder::thermal::full_spectrum(&ladder.ham.matrix(0.0), 10_000).unwrap();
    let e_mid = spec.mean_energy();
    let row = thermal_curve(&params, &b, &[0.0], &[e_mid], &ThermalOptions::default()).unwrap();
    let p = row[0].result.as_ref().unwrap();
    assert!(p.beta.abs() < 1e-6, "{}", p.beta);
    assert!((p.n_r - 0.5).abs() < 1e-8);
    // On a K-point grid the flat width is π²/3 + h²/6; the infinite-temperature
    // G is diagonal so n_k is flat.
    let h = 2.0 * PI / (16.0 * 4.0);
    assert!((p.k2_l - (PI * PI / 3.0 + h * h / 6.0)).abs() < 1e-8, "{}", p.k2_l);
}
