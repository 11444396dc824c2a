//! Transfer efficiency of `n` interacting bosons swept through a single
//! double well (`L_s = 1`, `J_par = 0`).
//!
//! Two closed forms valid for strong repulsion, plus direct integration of the
//! Schrödinger equation for arbitrary `U`.
//!
//! Ground-state sweep: `n` independent first-order resonances between
//! `|n-j, j>` and `|n-j-1, j+1>` with coupling `√((n-j)(j+1))`,
//!
//! ```text
//! n_R = Π_{j=0}^{n-1} [1 - ((n-j)/n) p_{n,j}],   p_{n,j} = exp(-2π (n-j)(j+1) / α).
//! ```
//!
//! Inverse sweep: the top state `|n,0>` meets `|n-ν, ν>` at `Δ = U (n-ν)` for
//! `ν = n, n-1, ..., 1`, through a `ν`-th order coupling
//! `J_n^(ν) = U^{-(ν-1)} ν/(ν-1)! √C(n,ν)`, giving
//!
//! ```text
//! n_R = 1 - (1/n) Σ_{μ=0}^{n-1} Π_{ν=n-μ}^{n} p_n^(ν),   p_n^(ν) = exp(-2π (J_n^(ν))² / α).
//! ```

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState, LadderGeometry};
use crate::hamiltonian::{Boundary, HamiltonianParams, LadderHamiltonian};
use crate::propagator::{PropagationSettings, StateVector};
use crate::protocols::{Ladder, SweepDirection, SweepOptions};

fn check_rate(alpha: f64) -> Result<()> {
    if alpha > 0.0 && !alpha.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("sweep rate must be > 0, got {alpha}")))
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("particle number must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Two-level Landau-Zener transfer probability `1 - exp(-2π/α)`.
pub fn p_lz(alpha: f64) -> Result<f64> {
    check_rate(alpha)?;
    Ok(-(-2.0 * PI / alpha).exp_m1())
}

/// Diabatic probability at a crossing with coupling `coupling`.
fn diabatic(coupling: f64, alpha: f64) -> f64 {
    (-2.0 * PI * coupling * coupling / alpha).exp()
}

/// Closed-form ground-state sweep efficiency.
pub fn gs_transfer(n: usize, alpha: f64) -> Result<f64> {
    check_count(n)?;
    check_rate(alpha)?;
    let nf = n as f64;
    Ok((0..n)
        .map(|j| {
            let (a, b) = ((n - j) as f64, (j + 1) as f64);
            1.0 - (a / nf) * diabatic((a * b).sqrt(), alpha)
        })
        .product())
}

/// Leading-order coupling of the `ν`-th order resonance `|n,0> → |n-ν,ν>`.
pub fn coupling(n: usize, nu: usize, u: f64) -> Result<f64> {
    check_count(n)?;
    if nu == 0 || nu > n {
        return Err(Error::Domain(format!("resonance order {nu} outside 1..={n}")));
    }
    if !(u > 0.0) {
        return Err(Error::Domain(format!("interaction must be > 0, got {u}")));
    }
    let factorial: f64 = (1..nu).map(|k| k as f64).product();
    Ok(u.powi(1 - nu as i32) * nu as f64 / factorial * binomial(n, nu).sqrt())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub order: usize,
    pub coupling: f64,
    /// Probability of crossing diabatically.
    pub diabatic: f64,
}

/// Sequence of resonances met by the top state in an inverse sweep, highest
/// order first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCascade {
    pub n: usize,
    pub u: f64,
    pub alpha: f64,
    pub resonances: Vec<Resonance>,
}

impl ResonanceCascade {
    pub fn new(n: usize, u: f64, alpha: f64) -> Result<Self> {
        check_rate(alpha)?;
        let resonances = (1..=n)
            .rev()
            .map(|order| {
                let c = coupling(n, order, u)?;
                Ok(Resonance { order, coupling: c, diabatic: diabatic(c, alpha) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, u, alpha, resonances })
    }

    /// Final right-well fraction: crossing order `ν` adiabatically leaves `ν`
    /// particles on the right.
    pub fn transfer(&self) -> f64 {
        let nf = self.n as f64;
        let mut survive = 1.0;
        let mut total = 0.0;
        for r in &self.resonances {
            total += survive * (1.0 - r.diabatic) * r.order as f64 / nf;
            survive *= r.diabatic;
        }
        total
    }
}

/// Closed-form inverse sweep efficiency.
pub fn inverse_transfer(n: usize, alpha: f64, u: f64) -> Result<f64> {
    check_rate(alpha)?;
    let p: Vec<f64> = (1..=n).map(|nu| Ok(diabatic(coupling(n, nu, u)?, alpha))).collect::<Result<_>>()?;
    // p[nu - 1] = p_n^(nu)
    let mut sum = 0.0;
    for mu in 0..n {
        sum += ((n - mu)..=n).map(|nu| p[nu - 1]).product::<f64>();
    }
    Ok(1.0 - sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellRun {
    pub transfer: f64,
    pub amplitude: f64,
    pub flagged: bool,
}

/// Exact transfer efficiency from integrating the double-well dynamics.
///
/// The run starts in the eigenstate of `H(Δ_start)` with the largest weight
/// on `|n, 0>`, i.e. the state adiabatically connected to all particles in the
/// left well, sweeps linearly from `±|Δ0|` to `∓|Δ0|` and then holds the final
/// bias while averaging the residual oscillations.
pub fn integrate_doublewell(
    n: usize,
    u: f64,
    delta0: f64,
    alpha: f64,
    direction: SweepDirection,
    settings: &PropagationSettings,
) -> Result<DoubleWellRun> {
    check_count(n)?;
    check_rate(alpha)?;
    let basis = FockBasis::new(LadderGeometry::new(1)?, n, n)?;
    let params = HamiltonianParams { j_par: 0.0, u, boundary: Boundary::Open };
    let opts = SweepOptions { delta0: delta0.abs(), rescale: 1.0, ..Default::default() };
    let ham = LadderHamiltonian::new(&params, &basis)?;
    let (start, _) = direction.signed(delta0, alpha);
    let eig = SymmetricEigen::new(ham.matrix(start).to_dense());
    let all_left = basis.index_of(&FockState(vec![n as u8, 0]))?;
    let col = (0..basis.dim())
        .max_by(|&a, &b| eig.eigenvectors[(all_left, a)].abs().total_cmp(&eig.eigenvectors[(all_left, b)].abs()))
        .expect("non-empty basis");
    let initial = StateVector::from_real(eig.eigenvectors.column(col).as_slice());
    let ladder = Ladder { params, basis: &basis, ham, initial };
    let res = ladder.sweep(direction, alpha, &opts, settings)?;
    Ok(DoubleWellRun { transfer: res.n_r_final, amplitude: res.amplitude, flagged: res.flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landau_zener_limits() {
        assert!((p_lz(2.0 * PI).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((p_lz(2.0 * PI).unwrap() - 0.63212).abs() < 1e-5);
        assert!(p_lz(1e9).unwrap() < 1e-8);
        assert!((p_lz(1e-3).unwrap() - 1.0).abs() < 1e-15);
        assert!(p_lz(0.0).is_err());
        assert!(p_lz(-1.0).is_err());
    }

    #[test]
    fn single_particle_reduces_to_lz() {
        for x in [0.05, 0.3, 1.0, 4.0, 20.0] {
            let alpha = 2.0 * PI / x;
            let p = p_lz(alpha).unwrap();
            assert!((gs_transfer(1, alpha).unwrap() - p).abs() < 1e-14);
            assert!((inverse_transfer(1, alpha, 3.0).unwrap() - p).abs() < 1e-14);
        }
    }

    #[test]
    fn two_particle_hand_values() {
        let alpha = 2.0 * PI;
        let e2 = (-2f64).exp();
        let gs = gs_transfer(2, alpha).unwrap();
        assert!((gs - (1.0 - e2) * (1.0 - e2 / 2.0)).abs() < 1e-15);
        assert!((gs - 0.8061549).abs() < 1e-6);
        let p2 = (-0.04f64).exp();
        let p1 = e2;
        let inv = inverse_transfer(2, alpha, 10.0).unwrap();
        assert!((inv - (1.0 - 0.5 * (p2 + p2 * p1))).abs() < 1e-15);
        assert!((inv - 0.4545909).abs() < 1e-6);
    }

    #[test]
    fn couplings() {
        assert!((coupling(5, 1, 7.0).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!((coupling(2, 2, 10.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((coupling(3, 3, 10.0).unwrap() - 0.015).abs() < 1e-15);
        assert!(coupling(3, 4, 10.0).is_err());
        assert!(coupling(3, 0, 10.0).is_err());
        assert!(coupling(3, 1, 0.0).is_err());
    }

    #[test]
    fn cascade_matches_closed_form() {
        for n in 1..=4 {
            for x in [0.1, 1.0, 5.0, 30.0] {
                let alpha = 2.0 * PI / x;
                let c = ResonanceCascade::new(n, 10.0, alpha).unwrap();
                assert_eq!(c.resonances.len(), n);
                assert!(c.resonances.iter().all(|r| r.coupling > 0.0 && r.diabatic > 0.0 && r.diabatic <= 1.0));
                assert!((c.transfer() - inverse_transfer(n, alpha, 10.0).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn particle_number_trends() {
        for x in [0.5, 2.0, 8.0] {
            let alpha = 2.0 * PI / x;
            let gs: Vec<f64> = (1..=4).map(|n| gs_transfer(n, alpha).unwrap()).collect();
            assert!(gs.windows(2).all(|w| w[1] > w[0]), "gs {gs:?}");
        }
        for x in [2.0, 8.0, 30.0] {
            let alpha = 2.0 * PI / x;
            let inv: Vec<f64> = (1..=3).map(|n| inverse_transfer(n, alpha, 10.0).unwrap()).collect();
            assert!(inv.windows(2).all(|w| w[1] < w[0]), "inv {inv:?}");
        }
    }

    #[test]
    fn rate_limits() {
        for n in 1..=4 {
            assert!(gs_transfer(n, 1e-3).unwrap() > 1.0 - 1e-12);
            assert!(gs_transfer(n, 1e6).unwrap() < 1e-4);
            assert!(inverse_transfer(n, 1e-9, 10.0).unwrap() > 1.0 - 1e-9);
            assert!(inverse_transfer(n, 1e6, 10.0).unwrap() < 1e-4);
        }
    }

    #[test]
    fn stronger_interaction_lowers_inverse_transfer() {
        let alpha = 2.0 * PI / 10.0;
        for n in 2..=3 {
            let vals: Vec<f64> = [2.0, 5.0, 10.0, 20.0].iter().map(|&u| inverse_transfer(n, alpha, u).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        }
    }
}
