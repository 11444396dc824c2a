//! Leg populations, one-body density matrices, quasi-momentum distributions
//! and entanglement entropies.
//!
//! The momentum distribution of leg σ is evaluated on a continuous grid,
//!
//! ```text
//! n_k = (1/L_s) Σ_{m,s} exp(-i k (m - s)) <b†_m b_s>,
//! ```
//!
//! and its width `<k²>` is the normalized second moment
//! `Σ k² n_k / Σ n_k` over a uniform grid on `[-π, π)`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, Leg};
use crate::hamiltonian::LadderHamiltonian;
use crate::propagator::StateVector;

/// Values of `n_k` above this negative threshold are rounding noise.
pub const NEGATIVITY_TOL: f64 = 1e-10;

/// Fraction of particles in the right leg.
pub fn leg_population(psi: &StateVector, basis: &FockBasis) -> f64 {
    if basis.particles() == 0 {
        return 0.0;
    }
    let count: f64 = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, c)| c.norm_sqr() * basis.leg_count(j, Leg::Right) as f64)
        .sum();
    count / basis.particles() as f64
}

#[derive(Debug, Clone, Copy)]
struct Hop {
    target: usize,
    source: usize,
    amp: f64,
}

/// Precomputed matrix elements of `b†_m b_s` within each leg.
#[derive(Debug, Clone)]
pub struct OneBodyTable {
    rungs: usize,
    /// `hops[leg][m * L_s + s]` for `m != s`.
    hops: [Vec<Vec<Hop>>; 2],
    /// `occ[leg][j * L_s + m]` = occupation of rung `m` in state `j`.
    occ: [Vec<f64>; 2],
}

impl OneBodyTable {
    pub fn new(basis: &FockBasis) -> Self {
        let geo = basis.geometry();
        let l = geo.rungs();
        let cap = basis.n_max() as u8;
        let mut hops: [Vec<Vec<Hop>>; 2] = [vec![Vec::new(); l * l], vec![Vec::new(); l * l]];
        let mut occ = [Vec::with_capacity(basis.dim() * l), Vec::with_capacity(basis.dim() * l)];
        let mut scratch = vec![0u8; basis.sites()];
        for (j, state) in basis.iter().enumerate() {
            for leg in Leg::BOTH {
                let li = leg.offset();
                for m in 0..l {
                    occ[li].push(state[geo.site(leg, m)] as f64);
                }
                for s in 0..l {
                    let ss = geo.site(leg, s);
                    if state[ss] == 0 {
                        continue;
                    }
                    for m in 0..l {
                        let ms = geo.site(leg, m);
                        if m == s || state[ms] >= cap {
                            continue;
                        }
                        scratch.copy_from_slice(state);
                        scratch[ss] -= 1;
                        scratch[ms] += 1;
                        let target = basis.find(&scratch).expect("hop stays inside the basis");
                        let amp = ((state[ss] as f64) * (state[ms] as f64 + 1.0)).sqrt();
                        hops[li][m * l + s].push(Hop { target, source: j, amp });
                    }
                }
            }
        }
        Self { rungs: l, hops, occ }
    }

    pub fn rungs(&self) -> usize {
        self.rungs
    }

    /// `G_ms = <ψ| b†_m b_s |ψ>` within `leg`.
    pub fn density_matrix(&self, psi: &[Complex64], leg: Leg) -> DMatrix<Complex64> {
        let l = self.rungs;
        let li = leg.offset();
        let mut g = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
        for (j, c) in psi.iter().enumerate() {
            let w = c.norm_sqr();
            for m in 0..l {
                g[(m, m)] += w * self.occ[li][j * l + m];
            }
        }
        for m in 0..l {
            for s in 0..l {
                if m == s {
                    continue;
                }
                let v: Complex64 = self.hops[li][m * l + s]
                    .iter()
                    .map(|h| psi[h.target].conj() * psi[h.source] * h.amp)
                    .sum();
                g[(m, s)] = v;
            }
        }
        g
    }

    /// Adds `weight * <v| b†_m b_s |v>` for a real vector `v` into `g`.
    pub fn accumulate_real(&self, v: &[f64], weight: f64, leg: Leg, g: &mut DMatrix<f64>) {
        let l = self.rungs;
        let li = leg.offset();
        for (j, c) in v.iter().enumerate() {
            let w = weight * c * c;
            if w == 0.0 {
                continue;
            }
            for m in 0..l {
                g[(m, m)] += w * self.occ[li][j * l + m];
            }
        }
        for m in 0..l {
            for s in 0..l {
                if m == s {
                    continue;
                }
                let val: f64 = self.hops[li][m * l + s].iter().map(|h| v[h.target] * v[h.source] * h.amp).sum();
                g[(m, s)] += weight * val;
            }
        }
    }
}

/// One-body density matrix of `leg` for state `psi`.
pub fn one_body_density_matrix(psi: &StateVector, basis: &FockBasis, leg: Leg) -> DMatrix<Complex64> {
    OneBodyTable::new(basis).density_matrix(&psi.amplitudes, leg)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(g: &DMatrix<Complex64>) -> f64 {
    SymmetricEigen::new(g.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Uniform grid of `K` points on `[-π, π)`: `k_j = -π + 2π j / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    k: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config(format!("momentum grid needs at least 2 points, got {points}")));
        }
        let h = 2.0 * PI / points as f64;
        Ok(Self { k: (0..points).map(|j| -PI + h * j as f64).collect() })
    }

    /// Default resolution `16 L_s`.
    pub fn for_rungs(rungs: usize) -> Self {
        Self::new(16 * rungs.max(1)).expect("16 L_s >= 2")
    }

    pub fn points(&self) -> &[f64] {
        &self.k
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.k.len() as f64
    }

    /// `∫ f dk` over one Brillouin zone. For periodic integrands this is the
    /// trapezoidal rule on `[-π, π]`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing()
    }
}

/// `n_k = (1/L_s) Σ_{m,s} e^{-ik(m-s)} G_ms` on every grid point.
pub fn momentum_distribution(g: &DMatrix<Complex64>, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let l = g.nrows();
    if g.ncols() != l {
        return Err(Error::DimensionMismatch { expected: l, got: g.ncols() });
    }
    // G_ms depends on k only through m - s, so sum the diagonals first.
    let mut by_offset = vec![Complex64::new(0.0, 0.0); 2 * l.max(1) - 1];
    for m in 0..l {
        for s in 0..l {
            by_offset[m + l - 1 - s] += g[(m, s)];
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for &k in grid.points() {
        let mut acc = 0.0;
        for (idx, c) in by_offset.iter().enumerate() {
            let d = idx as f64 - (l as f64 - 1.0);
            acc += (Complex64::from_polar(1.0, -k * d) * c).re;
        }
        let mut v = acc / l as f64;
        if v < 0.0 {
            if v < -NEGATIVITY_TOL {
                return Err(Error::Numerical {
                    message: format!("momentum distribution negative at k={k}; density matrix is not PSD"),
                    residual: v,
                });
            }
            v = 0.0;
        }
        out.push(v);
    }
    Ok(out)
}

/// Normalized second moment `Σ k² n_k / Σ n_k`; `None` for an empty leg.
pub fn momentum_width(n_k: &[f64], grid: &MomentumGrid) -> Option<f64> {
    let total: f64 = n_k.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let moment: f64 = n_k.iter().zip(grid.points()).map(|(n, k)| n * k * k).sum();
    Some(moment / total)
}

/// Bipartitions for the entanglement entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cut {
    /// Left leg versus right leg.
    Legs,
    /// Rungs `0..j` (both legs) versus the rest.
    Rungs(usize),
}

/// Von Neumann entropy of the reduced state on one side of `cut`.
pub fn entanglement_entropy(psi: &StateVector, basis: &FockBasis, cut: Cut) -> Result<f64> {
    let geo = basis.geometry();
    let in_a: Vec<bool> = (0..basis.sites())
        .map(|s| match cut {
            Cut::Legs => geo.leg_rung(s).0 == Leg::Left,
            Cut::Rungs(j) => geo.leg_rung(s).1 < j,
        })
        .collect();
    if let Cut::Rungs(j) = cut {
        if j > geo.rungs() {
            return Err(Error::Domain(format!("rung cut {j} beyond L_s={}", geo.rungs())));
        }
    }
    let mut a_index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut b_index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(basis.dim());
    for (j, occ) in basis.iter().enumerate() {
        let a: Vec<u8> = occ.iter().zip(&in_a).filter(|(_, &f)| f).map(|(&n, _)| n).collect();
        let b: Vec<u8> = occ.iter().zip(&in_a).filter(|(_, &f)| !f).map(|(&n, _)| n).collect();
        let na = a_index.len();
        let ia = *a_index.entry(a).or_insert(na);
        let nb = b_index.len();
        let ib = *b_index.entry(b).or_insert(nb);
        entries.push((ia, ib, psi.amplitudes[j]));
    }
    let mut m = DMatrix::from_element(a_index.len(), b_index.len(), Complex64::new(0.0, 0.0));
    for (ia, ib, c) in entries {
        m[(ia, ib)] = c;
    }
    let sv = m.singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    Ok(sv
        .iter()
        .map(|s| s * s / total)
        .filter(|&p| p > 1e-300)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0))
}

/// One time sample of every observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub delta: f64,
    pub n_r: f64,
    pub n_k_l: Vec<f64>,
    pub n_k_r: Vec<f64>,
    /// NaN when the leg is empty.
    pub k2_l: f64,
    pub k2_r: f64,
    pub energy: f64,
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultSeries {
    pub records: Vec<ObservableRecord>,
    pub max_norm_drift: f64,
}

impl ResultSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }
}

/// Bundles what is needed to turn a state into an [`ObservableRecord`].
#[derive(Debug, Clone)]
pub struct Measurement<'a> {
    pub basis: &'a FockBasis,
    pub ham: &'a LadderHamiltonian,
    pub table: OneBodyTable,
    pub grid: MomentumGrid,
    pub entropy: Option<Cut>,
}

impl<'a> Measurement<'a> {
    pub fn new(basis: &'a FockBasis, ham: &'a LadderHamiltonian) -> Self {
        Self {
            basis,
            ham,
            table: OneBodyTable::new(basis),
            grid: MomentumGrid::for_rungs(basis.geometry().rungs()),
            entropy: None,
        }
    }

    pub fn with_entropy(mut self, cut: Cut) -> Self {
        self.entropy = Some(cut);
        self
    }

    pub fn record(&self, psi: &StateVector, delta: f64) -> Result<ObservableRecord> {
        let n = self.basis.particles() as f64;
        let right = self.ham.right_count(&psi.amplitudes);
        let n_r = if n > 0.0 { right / n } else { 0.0 };
        let g_l = self.table.density_matrix(&psi.amplitudes, Leg::Left);
        let g_r = self.table.density_matrix(&psi.amplitudes, Leg::Right);
        let n_k_l = momentum_distribution(&g_l, &self.grid)?;
        let n_k_r = momentum_distribution(&g_r, &self.grid)?;
        let entropy = match self.entropy {
            Some(cut) => Some(entanglement_entropy(psi, self.basis, cut)?),
            None => None,
        };
        Ok(ObservableRecord {
            t: psi.time,
            delta,
            n_r,
            k2_l: momentum_width(&n_k_l, &self.grid).unwrap_or(f64::NAN),
            k2_r: momentum_width(&n_k_r, &self.grid).unwrap_or(f64::NAN),
            n_k_l,
            n_k_r,
            energy: self.ham.energy(&psi.amplitudes, delta),
            entropy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockState, LadderGeometry};

    fn basis(l: usize, n: usize, cap: usize) -> FockBasis {
        FockBasis::new(LadderGeometry::new(l).unwrap(), n, cap).unwrap()
    }

    fn fock(b: &FockBasis, occ: Vec<u8>) -> StateVector {
        StateVector::basis_state(b.dim(), b.index_of(&FockState(occ)).unwrap())
    }

    #[test]
    fn populations() {
        let b = basis(1, 1, 1);
        assert_eq!(leg_population(&fock(&b, vec![1, 0]), &b), 0.0);
        let s = 1.0 / 2f64.sqrt();
        let sym = StateVector::from_real(&[s, s]);
        assert!((leg_population(&sym, &b) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fock_density_matrix_is_diagonal() {
        let b = basis(3, 1, 1);
        let g = one_body_density_matrix(&fock(&b, vec![1, 0, 0, 0, 0, 0]), &b, Leg::Left);
        for m in 0..3 {
            for s in 0..3 {
                let expect = if m == 0 && s == 0 { 1.0 } else { 0.0 };
                assert!((g[(m, s)] - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_particle_gives_dirichlet_kernel() {
        let l = 4;
        let b = basis(l, 1, 1);
        let mut amps = vec![0.0; b.dim()];
        for m in 0..l {
            let mut occ = vec![0u8; 2 * l];
            occ[m] = 1;
            amps[b.index_of(&FockState(occ)).unwrap()] = 1.0 / (l as f64).sqrt();
        }
        let psi = StateVector::from_real(&amps);
        let g = one_body_density_matrix(&psi, &b, Leg::Left);
        for m in 0..l {
            for s in 0..l {
                assert!((g[(m, s)].re - 0.25).abs() < 1e-14);
            }
        }
        let grid = MomentumGrid::for_rungs(l);
        let nk = momentum_distribution(&g, &grid).unwrap();
        for (&k, &v) in grid.points().iter().zip(&nk) {
            // |Σ_m e^{-ikm}|² / L², written out as a direct double sum
            let direct: f64 = (0..l)
                .flat_map(|m| (0..l).map(move |s| (k * (m as f64 - s as f64)).cos()))
                .sum::<f64>()
                / (l * l) as f64;
            assert!((v - direct).abs() < 1e-13);
            let kernel = if k.abs() < 1e-12 {
                1.0
            } else {
                ((k * l as f64 / 2.0).sin() / (k / 2.0).sin()).powi(2) / (l * l) as f64
            };
            assert!((v - kernel).abs() < 1e-12);
        }
        assert!((nk[grid.len() / 2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn incoherent_density_is_flat() {
        let g = DMatrix::from_diagonal_element(5, 5, Complex64::new(0.7, 0.0));
        let grid = MomentumGrid::new(80).unwrap();
        let nk = momentum_distribution(&g, &grid).unwrap();
        assert!(nk.iter().all(|v| (v - 0.7).abs() < 1e-14));
        let h = grid.spacing();
        let w = momentum_width(&nk, &grid).unwrap();
        // rectangle rule over [-π, π) for k²: π²/3 + h²/6
        assert!((w - (PI * PI / 3.0 + h * h / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn width_limits() {
        let grid = MomentumGrid::new(64).unwrap();
        let mut peak = vec![0.0; 64];
        peak[32] = 1.0;
        assert_eq!(momentum_width(&peak, &grid), Some(0.0));
        let mut edge = vec![0.0; 64];
        edge[0] = 1.0;
        assert!((momentum_width(&edge, &grid).unwrap() - PI * PI).abs() < 1e-12);
        assert_eq!(momentum_width(&[0.0; 64], &grid), None);
    }

    #[test]
    fn broken_density_matrix_is_an_error() {
        let mut g = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.1, 0.0));
        g[(0, 1)] = Complex64::new(1.0, 0.0);
        g[(1, 0)] = Complex64::new(1.0, 0.0);
        assert!(momentum_distribution(&g, &MomentumGrid::new(16).unwrap()).is_err());
        assert!(MomentumGrid::new(1).is_err());
    }

    #[test]
    fn entropies() {
        let b = basis(2, 2, 2);
        let left = fock(&b, vec![1, 1, 0, 0]);
        assert!(entanglement_entropy(&left, &b, Cut::Legs).unwrap().abs() < 1e-14);
        let b1 = basis(1, 1, 1);
        let s = 1.0 / 2f64.sqrt();
        let bell = StateVector::from_real(&[s, s]);
        assert!((entanglement_entropy(&bell, &b1, Cut::Legs).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(entanglement_entropy(&bell, &b1, Cut::Rungs(1)).unwrap().abs() < 1e-14);
        assert!(entanglement_entropy(&bell, &b1, Cut::Rungs(2)).is_err());
    }
}
