//! Equilibrium reference values for quenches: the canonical ensemble of the
//! interacting ladder at fixed `N` and a grand-canonical ideal Bose gas.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, LadderGeometry, Leg};
use crate::hamiltonian::{single_particle_matrix, HamiltonianParams, LadderHamiltonian};
use crate::observables::{momentum_distribution, momentum_width, MomentumGrid, OneBodyTable};
use crate::propagator::StateVector;
use crate::sparse::CsrMatrix;

pub const DENSE_CAP: usize = 12_000;
pub const BETA_BRACKET: f64 = 50.0;
pub const ENERGY_TOL: f64 = 1e-8;

/// Boltzmann weights below this fraction of the largest do not contribute to
/// the thermal one-body density matrix.
const WEIGHT_CUTOFF: f64 = 1e-18;

/// Complete eigendecomposition, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `trace(H) / dim`, the infinite-temperature energy.
    pub fn mean_energy(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.dim() as f64
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.eigenvectors.as_slice()[j * d..(j + 1) * d]
    }

    /// Normalized Boltzmann weights `e^{-β λ_j} / Z`.
    pub fn weights(&self, beta: f64) -> Result<Vec<f64>> {
        boltzmann_weights(&self.eigenvalues, beta)
    }

    /// `<v_j|A|v_j>` for every eigenvector.
    pub fn diagonal_elements(&self, a: &CsrMatrix) -> Result<Vec<f64>> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.dim() });
        }
        let mut av = vec![0.0; self.dim()];
        Ok((0..self.dim())
            .map(|j| {
                let v = self.vector(j);
                a.apply_real(v, &mut av);
                v.iter().zip(&av).map(|(x, y)| x * y).sum()
            })
            .collect())
    }
}

/// Dense diagonalization of `h`.
pub fn full_spectrum(h: &CsrMatrix, cap: usize) -> Result<Spectrum> {
    let dim = h.dim();
    if dim > cap {
        return Err(Error::DenseCap { dim, cap });
    }
    if dim == 0 {
        return Err(Error::Domain("cannot diagonalize an empty operator".into()));
    }
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

fn boltzmann_weights(levels: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !beta.is_finite() {
        return Err(Error::Domain(format!("inverse temperature must be finite, got {beta}")));
    }
    let shift = levels.iter().map(|&e| -beta * e).fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = levels.iter().map(|&e| (-beta * e - shift).exp()).collect();
    let z: f64 = w.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Numerical { message: format!("partition function is {z} at beta={beta}"), residual: z });
    }
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// Canonical expectation value of `a` at inverse temperature `beta`.
pub fn thermal_expectation(spec: &Spectrum, beta: f64, a: &CsrMatrix) -> Result<f64> {
    let w = spec.weights(beta)?;
    let diag = spec.diagonal_elements(a)?;
    finite(w.iter().zip(&diag).map(|(w, d)| w * d).sum(), "thermal expectation")
}

/// Canonical `<H>_β`.
pub fn mean_energy(spec: &Spectrum, beta: f64) -> Result<f64> {
    let w = spec.weights(beta)?;
    finite(w.iter().zip(&spec.eigenvalues).map(|(w, e)| w * e).sum(), "thermal energy")
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_nan() {
        Err(Error::Numerical { message: format!("{what} is NaN"), residual: x })
    } else {
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMatch {
    pub beta: f64,
    pub energy: f64,
    pub residual: f64,
}

impl BetaMatch {
    pub fn negative(&self) -> bool {
        self.beta < 0.0
    }
}

/// Finds `β` with `<H>_β = target` by bisection.
///
/// `<H>_β` is non-increasing in `β`. The initial bracket `[-50, 50]` is
/// widened by doubling whenever the target lies outside it, which happens
/// when the target sits within `~e^{-50 gap}` of a spectral edge. Targets
/// within `tol` of an edge are matched to a point just inside it.
pub fn match_beta(spec: &Spectrum, target: f64, tol: f64) -> Result<BetaMatch> {
    let (lo_e, hi_e) = (spec.ground_energy(), spec.max_energy());
    if !(target > lo_e - tol && target < hi_e + tol) || hi_e - lo_e <= 2.0 * tol {
        return Err(Error::Domain(format!(
            "target energy {target} outside the spectral range ({lo_e}, {hi_e})"
        )));
    }
    let inner = target.clamp(lo_e + 0.5 * tol, hi_e - 0.5 * tol);
    let m = solve_decreasing(|b| mean_energy(spec, b), inner, 0.5 * tol)?;
    Ok(BetaMatch { residual: (m.energy - target).abs(), ..m })
}

/// Root of a non-increasing function of `β` by bracket extension and bisection.
fn solve_decreasing(f: impl Fn(f64) -> Result<f64>, target: f64, tol: f64) -> Result<BetaMatch> {
    let mut lo = -BETA_BRACKET;
    let mut hi = BETA_BRACKET;
    let mut f_hi = f(hi)?;
    while f_hi > target {
        if hi > 1e12 {
            return Err(Error::Numerical { message: "no bracket for positive beta".into(), residual: f_hi - target });
        }
        lo = hi;
        hi *= 2.0;
        f_hi = f(hi)?;
    }
    let mut f_lo = f(lo)?;
    while f_lo < target {
        if lo < -1e12 {
            return Err(Error::Numerical { message: "no bracket for negative beta".into(), residual: f_lo - target });
        }
        hi = lo;
        lo *= 2.0;
        f_lo = f(lo)?;
    }
    let mut best = if (f_lo - target).abs() < (f_hi - target).abs() { (lo, f_lo) } else { (hi, f_hi) };
    for _ in 0..400 {
        if (best.1 - target).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid)?;
        if (fm - target).abs() < (best.1 - target).abs() {
            best = (mid, fm);
        }
        if fm > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = (best.1 - target).abs();
    if residual > tol {
        return Err(Error::Numerical { message: format!("energy matching stalled at beta={}", best.0), residual });
    }
    Ok(BetaMatch { beta: best.0, energy: best.1, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalPoint {
    pub delta_f: f64,
    pub beta: f64,
    pub energy: f64,
    pub n_r: f64,
    pub k2_l: f64,
    pub k2_r: f64,
    /// Set for the grand-canonical reference only.
    pub chemical_potential: Option<f64>,
    /// `β < 0`: no positive-temperature equilibrium state has this energy.
    pub negative_temperature: bool,
    /// `false` when no equilibrium state matched; values are NaN.
    pub converged: bool,
}

impl ThermalPoint {
    fn unmatched(delta_f: f64, energy: f64) -> Self {
        Self {
            delta_f,
            beta: f64::NAN,
            energy,
            n_r: f64::NAN,
            k2_l: f64::NAN,
            k2_r: f64::NAN,
            chemical_potential: None,
            negative_temperature: false,
            converged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalRow {
    pub delta_f: f64,
    pub result: std::result::Result<ThermalPoint, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalOptions {
    pub dense_cap: usize,
    pub energy_tol: f64,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self { dense_cap: DENSE_CAP, energy_tol: ENERGY_TOL }
    }
}

fn widths(g_l: DMatrix<f64>, g_r: DMatrix<f64>, grid: &MomentumGrid) -> Result<(f64, f64)> {
    let k2 = |g: DMatrix<f64>| -> Result<f64> {
        let n_k = momentum_distribution(&g.map(|x| Complex::new(x, 0.0)), grid)?;
        Ok(momentum_width(&n_k, grid).unwrap_or(f64::NAN))
    };
    Ok((k2(g_l)?, k2(g_r)?))
}

/// Canonical state of `H(delta_f)` with mean energy `energy`.
pub fn thermal_point(
    ham: &LadderHamiltonian,
    basis: &FockBasis,
    table: &OneBodyTable,
    delta_f: f64,
    energy: f64,
    opts: &ThermalOptions,
) -> Result<ThermalPoint> {
    let spec = full_spectrum(&ham.matrix(delta_f), opts.dense_cap)?;
    let m = match_beta(&spec, energy, opts.energy_tol)?;
    let w = spec.weights(m.beta)?;
    let nr = ham.bias_diagonal();
    let n = basis.particles() as f64;
    let l = basis.geometry().rungs();
    let w_max = w.iter().copied().fold(0.0, f64::max);
    let mut right = 0.0;
    let mut g_l = DMatrix::zeros(l, l);
    let mut g_r = DMatrix::zeros(l, l);
    for (j, &wj) in w.iter().enumerate() {
        if wj < WEIGHT_CUTOFF * w_max {
            continue;
        }
        let v = spec.vector(j);
        right += wj * v.iter().zip(nr).map(|(c, k)| c * c * k).sum::<f64>();
        table.accumulate_real(v, wj, Leg::Left, &mut g_l);
        table.accumulate_real(v, wj, Leg::Right, &mut g_r);
    }
    let grid = MomentumGrid::for_rungs(l);
    let (k2_l, k2_r) = widths(g_l, g_r, &grid)?;
    Ok(ThermalPoint {
        delta_f,
        beta: m.beta,
        energy: m.energy,
        n_r: if n > 0.0 { right / n } else { 0.0 },
        k2_l,
        k2_r,
        chemical_potential: None,
        negative_temperature: m.negative(),
        converged: true,
    })
}

/// Quench energies `<ψ0|H(Δf)|ψ0>` for each final bias.
pub fn quench_energies(ham: &LadderHamiltonian, psi0: &StateVector, deltas: &[f64]) -> Vec<f64> {
    deltas.iter().map(|&d| ham.energy(&psi0.amplitudes, d)).collect()
}

/// Energy-matched canonical points along a grid of final biases. Points are
/// computed in parallel on the current rayon pool; failures are kept per row.
pub fn thermal_curve(
    params: &HamiltonianParams,
    basis: &FockBasis,
    deltas: &[f64],
    energies: &[f64],
    opts: &ThermalOptions,
) -> Result<Vec<ThermalRow>> {
    if deltas.len() != energies.len() {
        return Err(Error::DimensionMismatch { expected: deltas.len(), got: energies.len() });
    }
    if basis.dim() > opts.dense_cap {
        return Err(Error::DenseCap { dim: basis.dim(), cap: opts.dense_cap });
    }
    let ham = LadderHamiltonian::new(params, basis)?;
    let table = OneBodyTable::new(basis);
    Ok(deltas
        .par_iter()
        .zip(energies)
        .map(|(&d, &e)| ThermalRow {
            delta_f: d,
            result: thermal_point(&ham, basis, &table, d, e, opts).map_err(|err| err.to_string()),
        })
        .collect())
}

/// Single-particle eigenmodes of the ladder.
struct Modes {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Modes {
    fn new(geometry: LadderGeometry, params: &HamiltonianParams, delta: f64) -> Self {
        let eig = SymmetricEigen::new(single_particle_matrix(geometry, params, delta));
        Self { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// Bose occupations at `|β| = b` with the chemical potential a distance
    /// `s > 0` beyond the band edge the sign of `β` selects.
    fn occupations(&self, positive: bool, b: f64, s: f64) -> Vec<f64> {
        let edge = if positive {
            self.energies.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        self.energies
            .iter()
            .map(|&e| 1.0 / (b * ((e - edge).abs() + s)).exp_m1())
            .collect()
    }

    /// Occupations with `Σ f = n` at inverse temperature `beta`, plus `μ`.
    fn fix_particles(&self, beta: f64, n: f64) -> (Vec<f64>, f64) {
        let m = self.energies.len() as f64;
        if beta == 0.0 {
            return (vec![n / m; self.energies.len()], f64::NAN);
        }
        let (positive, b) = (beta > 0.0, beta.abs());
        let count = |s: f64| self.occupations(positive, b, s).iter().sum::<f64>();
        let mut lo = 0.25 / (b * n);
        while count(lo) < n {
            lo *= 0.5;
        }
        let mut hi = 2.0 * lo;
        while count(hi) > n {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) > n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = (lo * hi).sqrt();
        let mu = if positive {
            self.energies.iter().copied().fold(f64::INFINITY, f64::min) - s
        } else {
            self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max) + s
        };
        (self.occupations(positive, b, s), mu)
    }

    fn energy(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.energies).map(|(f, e)| f * e).sum()
    }
}

/// Default ideal-gas energy `-2 J_par N`.
pub fn ideal_gas_energy(params: &HamiltonianParams, particles: usize) -> f64 {
    -2.0 * params.j_par * particles as f64
}

/// Grand-canonical ideal Bose gas (`U = 0`) with mean particle number
/// `particles` and mean energy `energy` at every final bias. Points where no
/// `(β, μ)` reproduces the energy come back unconverged.
pub fn ideal_gas_reference(
    params: &HamiltonianParams,
    geometry: LadderGeometry,
    particles: usize,
    deltas: &[f64],
    energy: f64,
) -> Vec<ThermalPoint> {
    deltas
        .iter()
        .map(|&d| ideal_gas_point(params, geometry, particles, d, energy).unwrap_or_else(|_| ThermalPoint::unmatched(d, energy)))
        .collect()
}

fn ideal_gas_point(
    params: &HamiltonianParams,
    geometry: LadderGeometry,
    particles: usize,
    delta_f: f64,
    energy: f64,
) -> Result<ThermalPoint> {
    if particles == 0 {
        return Err(Error::Domain("ideal gas needs at least one particle".into()));
    }
    let modes = Modes::new(geometry, params, delta_f);
    let n = particles as f64;
    let lo = n * modes.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = n * modes.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(energy > lo && energy < hi) {
        return Err(Error::Domain(format!("energy {energy} outside ({lo}, {hi})")));
    }
    let m = solve_decreasing(|b| Ok(modes.energy(&modes.fix_particles(b, n).0)), energy, ENERGY_TOL * n.max(1.0))?;
    let (f, mu) = modes.fix_particles(m.beta, n);
    let l = geometry.rungs();
    let mut g = [DMatrix::zeros(l, l), DMatrix::zeros(l, l)];
    let mut right = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let phi = modes.vectors.column(i);
        for leg in Leg::BOTH {
            let sites = geometry.leg_sites(leg);
            let gl = &mut g[leg.offset()];
            for (a, sa) in sites.clone().enumerate() {
                for (b, sb) in sites.clone().enumerate() {
                    gl[(a, b)] += fi * phi[sa] * phi[sb];
                }
            }
        }
        right += fi * geometry.leg_sites(Leg::Right).map(|s| phi[s] * phi[s]).sum::<f64>();
    }
    let [g_l, g_r] = g;
    let (k2_l, k2_r) = widths(g_l, g_r, &MomentumGrid::for_rungs(l))?;
    Ok(ThermalPoint {
        delta_f,
        beta: m.beta,
        energy: m.energy,
        n_r: right / n,
        k2_l,
        k2_r,
        chemical_potential: Some(mu),
        negative_temperature: m.negative(),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Boundary;
    use crate::propagator::ground_state;
    use std::f64::consts::PI;

    fn basis(l: usize, n: usize) -> FockBasis {
        FockBasis::new(LadderGeometry::new(l).unwrap(), n, n.max(1)).unwrap()
    }

    fn spectrum(l: usize, n: usize, delta: f64) -> (FockBasis, LadderHamiltonian, Spectrum) {
        let b = basis(l, n);
        let h = LadderHamiltonian::new(&HamiltonianParams::default(), &b).unwrap();
        let s = full_spectrum(&h.matrix(delta), DENSE_CAP).unwrap();
        (b, h, s)
    }

    #[test]
    fn two_level_spectrum() {
        let (_, _, s) = spectrum(1, 1, 0.0);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14 && (s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_trace() {
        let (_, h, s) = spectrum(2, 2, 0.7);
        let dense = h.matrix(0.7).to_dense();
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.eigenvalues.clone()));
        let rec = &s.eigenvectors * lambda * s.eigenvectors.transpose();
        let err = (&rec - &dense).abs().max();
        assert!(err < 1e-8 * dense.abs().max(), "{err}");
        let ortho = (s.eigenvectors.transpose() * &s.eigenvectors - DMatrix::identity(s.dim(), s.dim())).abs().max();
        assert!(ortho < 1e-10);
        let trace: f64 = dense.diagonal().sum();
        assert!((s.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-8 * trace.abs().max(1.0));
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lowest_level_matches_lanczos() {
        let (_, h, s) = spectrum(2, 2, 0.3);
        let (e0, _) = ground_state(&h.matrix(0.3), 1e-12, 1).unwrap();
        assert!((e0 - s.ground_energy()).abs() < 1e-8);
    }

    #[test]
    fn cap_is_enforced() {
        let (_, h, _) = spectrum(2, 2, 0.0);
        assert!(matches!(full_spectrum(&h.matrix(0.0), 3), Err(Error::DenseCap { cap: 3, .. })));
    }

    #[test]
    fn temperature_limits() {
        let (b, h, s) = spectrum(2, 2, 0.4);
        let a = crate::hamiltonian::build_bias_generator(&b);
        let cold = thermal_expectation(&s, 1e4, &a).unwrap();
        let v0 = s.vector(0);
        let direct: f64 = v0.iter().zip(h.bias_diagonal()).map(|(c, k)| c * c * k).sum();
        assert!((cold - direct).abs() < 1e-10);
        let hot = thermal_expectation(&s, 0.0, &a).unwrap();
        assert!((hot - a.diagonal().iter().sum::<f64>() / b.dim() as f64).abs() < 1e-12);
        // No overflow for extreme β of either sign.
        assert!(thermal_expectation(&s, 1e6, &a).unwrap().is_finite());
        assert!(thermal_expectation(&s, -1e6, &a).unwrap().is_finite());
        assert!(thermal_expectation(&s, f64::NAN, &a).is_err());
    }

    #[test]
    fn energy_decreases_with_beta() {
        let (_, _, s) = spectrum(2, 2, -0.5);
        let es: Vec<f64> = (-40..=40).map(|i| mean_energy(&s, i as f64 * 0.25).unwrap()).collect();
        assert!(es.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn beta_matching() {
        let (_, _, s) = spectrum(2, 2, 0.2);
        let m = match_beta(&s, s.mean_energy(), 1e-10).unwrap();
        assert!(m.beta.abs() < 1e-8);
        let m = match_beta(&s, s.ground_energy() + 1e-3, 1e-10).unwrap();
        assert!(m.beta > 5.0 && m.residual <= 1e-10);
        let m = match_beta(&s, s.mean_energy() + 0.3, 1e-10).unwrap();
        assert!(m.negative() && (mean_energy(&s, m.beta).unwrap() - s.mean_energy() - 0.3).abs() <= 1e-10);
        assert!(match_beta(&s, s.ground_energy() - 1.0, 1e-8).is_err());
        assert!(match_beta(&s, s.max_energy() + 1e-6, 1e-8).is_err());
        let edge = match_beta(&s, s.ground_energy() - 1e-12, 1e-8).unwrap();
        assert!(edge.beta > 0.0 && edge.residual <= 1e-8);
    }

    #[test]
    fn bracket_extends_near_ground_state() {
        let s = Spectrum { eigenvalues: vec![0.0, 0.1, 0.2], eigenvectors: DMatrix::identity(3, 3) };
        let target = 0.1 * (-10f64).exp();
        let m = match_beta(&s, target, 1e-13).unwrap();
        assert!(m.beta > BETA_BRACKET && m.residual <= 1e-13, "{m:?}");
        let m = match_beta(&s, 0.2 - target, 1e-13).unwrap();
        assert!(m.beta < -BETA_BRACKET);
    }

    #[test]
    fn infinite_temperature_is_flat() {
        let b = basis(4, 2);
        let params = HamiltonianParams::default();
        let ham = LadderHamiltonian::new(&params, &b).unwrap();
        let table = OneBodyTable::new(&b);
        let delta = -4.0 * params.j_par;
        let spec = full_spectrum(&ham.matrix(delta), DENSE_CAP).unwrap();
        let p = thermal_point(&ham, &b, &table, delta, spec.mean_energy(), &ThermalOptions::default()).unwrap();
        assert!(p.beta.abs() < 1e-6);
        let grid = MomentumGrid::for_rungs(4);
        let h = grid.spacing();
        let flat = PI * PI / 3.0 + h * h / 6.0;
        assert!((p.k2_l - flat).abs() < 1e-6 && (p.k2_r - flat).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn large_positive_bias_leaves_right_leg_empty() {
        let b = basis(2, 2);
        let params = HamiltonianParams::default();
        let ham = LadderHamiltonian::new(&params, &b).unwrap();
        let (_, psi0) = ground_state(&ham.matrix(100.0), 1e-12, 0).unwrap();
        let e = quench_energies(&ham, &psi0, &[100.0])[0];
        let rows = thermal_curve(&params, &b, &[100.0], &[e], &ThermalOptions::default()).unwrap();
        let p = rows[0].result.clone().unwrap();
        assert!(p.n_r < 1e-3 && p.beta > 0.0, "{p:?}");
    }

    #[test]
    fn curve_keeps_failed_rows() {
        let b = basis(2, 1);
        let params = HamiltonianParams::default();
        let rows = thermal_curve(&params, &b, &[0.0, 1.0], &[-100.0, 0.0], &ThermalOptions::default()).unwrap();
        assert!(rows[0].result.is_err());
        assert!(rows[1].result.is_ok());
        assert!(thermal_curve(&params, &b, &[0.0], &[], &ThermalOptions::default()).is_err());
    }

    #[test]
    fn ideal_gas_decoupled_rungs() {
        // J_par = 0: every rung is the two-level problem [[0, -1], [-1, Δ]].
        let params = HamiltonianParams { j_par: 0.0, u: 0.0, boundary: Boundary::Open };
        let geom = LadderGeometry::new(3).unwrap();
        let n = 4usize;
        for (delta, energy) in [(1.5, 0.0), (-0.8, -1.0), (0.0, -2.5)] {
            let p = ideal_gas_reference(&params, geom, n, &[delta], energy)[0];
            assert!(p.converged);
            let r = (delta * delta / 4.0 + 1.0f64).sqrt();
            let levels = [delta / 2.0 - r, delta / 2.0 + r];
            let right = [(1.0 - delta / (2.0 * r)) / 2.0, (1.0 + delta / (2.0 * r)) / 2.0];
            let mu = p.chemical_potential.unwrap();
            let f: Vec<f64> = levels.iter().map(|e| 3.0 / (p.beta * (e - mu)).exp_m1()).collect();
            assert!((f.iter().sum::<f64>() - n as f64).abs() < 1e-6, "{f:?}");
            assert!((f[0] * levels[0] + f[1] * levels[1] - energy).abs() < 1e-6);
            let n_r = (f[0] * right[0] + f[1] * right[1]) / n as f64;
            assert!((p.n_r - n_r).abs() < 1e-6);
        }
    }

    #[test]
    fn ideal_gas_limits() {
        let params = HamiltonianParams::default();
        let geom = LadderGeometry::new(4).unwrap();
        let e = ideal_gas_energy(&params, 4);
        let pts = ideal_gas_reference(&params, geom, 4, &[-4.0 * params.j_par, -40.0], e);
        assert!(pts[0].beta.abs() < 1e-6 && (pts[0].n_r - 0.5).abs() < 1e-6, "{:?}", pts[0]);
        assert!(pts[1].negative_temperature);
        // The open-chain band bottom lies above -2 J_par, so -2 J_par N is
        // out of reach once the right band is pushed away.
        assert!(!ideal_gas_reference(&params, geom, 4, &[40.0], e)[0].converged);
        let far = ideal_gas_reference(&params, geom, 4, &[40.0], -2.0)[0];
        assert!(far.converged && far.beta > 0.0 && far.n_r < 1e-3, "{far:?}");
        let bad = ideal_gas_reference(&params, geom, 4, &[0.0], -100.0)[0];
        assert!(!bad.converged && bad.n_r.is_nan());
    }
}
