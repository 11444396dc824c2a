//! Two-leg Bose-Hubbard ladder Hamiltonian.
//!
//! `H(Δ) = H0 + Δ N_R` where `H0` holds rung hopping (`J = 1`), leg hopping
//! `J_par`, and the on-site interaction `(U/2) n (n - 1)`, and `N_R` counts
//! right-leg particles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, LadderGeometry, Leg};
use crate::sparse::{CsrMatrix, LinearOperator};

/// Rung hopping is the energy unit.
pub const RUNG_HOPPING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub j_par: f64,
    pub u: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for HamiltonianParams {
    /// Reference parameter set: `J_par = 0.38`, `U = 1.58`, open legs.
    fn default() -> Self {
        Self { j_par: 0.38, u: 1.58, boundary: Boundary::Open }
    }
}

impl HamiltonianParams {
    pub fn new(j_par: f64, u: f64) -> Self {
        Self { j_par, u, boundary: Boundary::Open }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_par.is_finite() && self.j_par >= 0.0) {
            return Err(Error::Config(format!("J_par must be finite and >= 0, got {}", self.j_par)));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(Error::Config(format!("U must be finite and >= 0, got {}", self.u)));
        }
        Ok(())
    }

    /// Boundary-reflection time `L_s / (2 J_par)`.
    pub fn reflection_time(&self, rungs: usize) -> f64 {
        rungs as f64 / (2.0 * self.j_par)
    }
}

/// Hopping bonds `(site_a, site_b, amplitude)`, each listed once.
pub fn bonds(geometry: LadderGeometry, params: &HamiltonianParams) -> Vec<(usize, usize, f64)> {
    let l = geometry.rungs();
    let mut out = Vec::new();
    for i in 0..l {
        out.push((geometry.site(Leg::Left, i), geometry.site(Leg::Right, i), RUNG_HOPPING));
    }
    if params.j_par != 0.0 {
        for leg in Leg::BOTH {
            for i in 0..l.saturating_sub(1) {
                out.push((geometry.site(leg, i), geometry.site(leg, i + 1), params.j_par));
            }
            if params.boundary == Boundary::Periodic && l > 2 {
                out.push((geometry.site(leg, l - 1), geometry.site(leg, 0), params.j_par));
            }
        }
    }
    out
}

/// Static part `H0`: hopping plus on-site interaction.
pub fn build_static(params: &HamiltonianParams, basis: &FockBasis) -> Result<CsrMatrix> {
    params.validate()?;
    let bonds = bonds(basis.geometry(), params);
    let cap = basis.n_max() as u8;
    let mut triplets = Vec::with_capacity(basis.dim() * (1 + 2 * bonds.len()));
    let mut scratch = vec![0u8; basis.sites()];
    for (j, occ) in basis.iter().enumerate() {
        let interaction: f64 = occ.iter().map(|&n| (n as f64) * (n as f64 - 1.0)).sum::<f64>() * 0.5 * params.u;
        triplets.push((j, j, interaction));
        for &(a, b, t) in &bonds {
            for (dest, src) in [(a, b), (b, a)] {
                if occ[src] == 0 || occ[dest] >= cap {
                    continue;
                }
                scratch.copy_from_slice(occ);
                scratch[src] -= 1;
                scratch[dest] += 1;
                let target = basis
                    .find(&scratch)
                    .expect("particle-conserving hop stays inside the basis");
                let amp = ((occ[src] as f64) * (occ[dest] as f64 + 1.0)).sqrt();
                triplets.push((target, j, -t * amp));
            }
        }
    }
    CsrMatrix::from_triplets(basis.dim(), triplets)
}

/// Diagonal of `N_R`, the right-leg particle count, per basis state.
pub fn right_leg_counts(basis: &FockBasis) -> Vec<f64> {
    (0..basis.dim()).map(|j| basis.leg_count(j, Leg::Right) as f64).collect()
}

pub fn build_bias_generator(basis: &FockBasis) -> CsrMatrix {
    CsrMatrix::from_diagonal(&right_leg_counts(basis))
}

/// `H0 + delta * NR` as an explicit sparse matrix.
pub fn assemble(h0: &CsrMatrix, nr: &CsrMatrix, delta: f64) -> Result<CsrMatrix> {
    h0.add_scaled(nr, delta)
}

/// `H0` and the diagonal of `N_R`, applied on the fly for any bias.
#[derive(Debug, Clone)]
pub struct LadderHamiltonian {
    h0: CsrMatrix,
    nr: Vec<f64>,
}

impl LadderHamiltonian {
    pub fn new(params: &HamiltonianParams, basis: &FockBasis) -> Result<Self> {
        Ok(Self { h0: build_static(params, basis)?, nr: right_leg_counts(basis) })
    }

    pub fn from_parts(h0: CsrMatrix, nr: &CsrMatrix) -> Result<Self> {
        if h0.dim() != nr.dim() {
            return Err(Error::DimensionMismatch { expected: h0.dim(), got: nr.dim() });
        }
        Ok(Self { nr: nr.diagonal(), h0 })
    }

    pub fn static_part(&self) -> &CsrMatrix {
        &self.h0
    }

    pub fn bias_diagonal(&self) -> &[f64] {
        &self.nr
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn at(&self, delta: f64) -> BiasedHamiltonian<'_> {
        BiasedHamiltonian { ham: self, delta }
    }

    pub fn matrix(&self, delta: f64) -> CsrMatrix {
        assemble(&self.h0, &CsrMatrix::from_diagonal(&self.nr), delta).expect("parts share a dimension")
    }

    /// `<psi|N_R|psi>`.
    pub fn right_count(&self, psi: &[Complex64]) -> f64 {
        psi.iter().zip(&self.nr).map(|(c, n)| c.norm_sqr() * n).sum()
    }

    /// `<psi|H(delta)|psi>` split as `<H0> + delta <N_R>`.
    pub fn energy(&self, psi: &[Complex64], delta: f64) -> f64 {
        self.h0.expectation(psi) + delta * self.right_count(psi)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BiasedHamiltonian<'a> {
    ham: &'a LadderHamiltonian,
    delta: f64,
}

impl LinearOperator for BiasedHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.ham.dim()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.ham.h0.apply(x, out);
        if self.delta != 0.0 {
            for ((o, xi), n) in out.iter_mut().zip(x).zip(&self.ham.nr) {
                *o += xi * (self.delta * n);
            }
        }
    }
}

/// One-particle ladder Hamiltonian on the `2 L_s` sites.
pub fn single_particle_matrix(geometry: LadderGeometry, params: &HamiltonianParams, delta: f64) -> DMatrix<f64> {
    let n = geometry.sites();
    let mut h = DMatrix::zeros(n, n);
    for (a, b, t) in bonds(geometry, params) {
        h[(a, b)] -= t;
        h[(b, a)] -= t;
    }
    for s in geometry.leg_sites(Leg::Right) {
        h[(s, s)] += delta;
    }
    h
}
