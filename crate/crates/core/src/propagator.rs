//! Ground states by restarted Lanczos and real-time evolution by Krylov
//! exponentiation.
//!
//! Time-dependent biases are handled with the exponential midpoint rule: a step
//! from `t` to `t + dt` applies `exp(-i H(Δ(t + dt/2)) dt)`. States are never
//! renormalized, so norm drift stays visible as a diagnostic.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::LadderHamiltonian;
use crate::sparse::{CsrMatrix, LinearOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>, time: f64) -> Self {
        Self { amplitudes, time }
    }

    /// Basis state `index` of a `dim`-dimensional space.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes, time: 0.0 }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { amplitudes: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|c| *c /= n);
        }
        self
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSettings {
    /// Base time step in units of `1/J`.
    pub dt: f64,
    pub krylov_dim: usize,
    /// Local error bound per Krylov substep.
    pub step_tol: f64,
    /// Observers fire every `sample_stride` steps.
    pub sample_stride: usize,
    /// Smallest substep before giving up.
    pub dt_min: f64,
    /// Longest trajectory a single schedule may request.
    pub max_time: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self { dt: 0.01, krylov_dim: 30, step_tol: 1e-11, sample_stride: 10, dt_min: 1e-9, max_time: 1.0e4 }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            problems.push(format!("dt must be > 0, got {}", self.dt));
        }
        if self.krylov_dim < 2 {
            problems.push(format!("krylov_dim must be >= 2, got {}", self.krylov_dim));
        }
        if !(self.step_tol > 0.0) {
            problems.push(format!("step_tol must be > 0, got {}", self.step_tol));
        }
        if self.sample_stride == 0 {
            problems.push("sample_stride must be >= 1".to_string());
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            problems.push(format!("dt_min must lie in (0, dt], got {}", self.dt_min));
        }
        if !(self.max_time > 0.0) {
            problems.push(format!("max_time must be > 0, got {}", self.max_time));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

const GS_KRYLOV: usize = 80;
const GS_MAX_RESTARTS: usize = 500;

/// Lowest eigenpair of a real symmetric sparse matrix.
///
/// Restarted Lanczos with full reorthogonalization, started from a ChaCha
/// vector keyed by `seed`. Returns once `‖Hψ - Eψ‖ <= tol`.
pub fn ground_state(h: &CsrMatrix, tol: f64, seed: u64) -> Result<(f64, StateVector)> {
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::Domain("empty operator".into()));
    }
    if !h.is_hermitian() {
        return Err(Error::Domain("ground_state needs a symmetric operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let scale = h.max_abs().max(1.0);
    let m = GS_KRYLOV.min(dim);
    let mut residual = f64::INFINITY;
    let mut hx = vec![0.0; dim];

    for _ in 0..GS_MAX_RESTARTS {
        normalize_real(&mut start);
        let mut q: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![0.0; dim];
        for j in 0..m {
            h.apply_real(&q[j], &mut w);
            let a = dot(&q[j], &w);
            alpha.push(a);
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(qi, &w);
                    axpy(-c, qi, &mut w);
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == m || b <= 1e-13 * scale {
                break;
            }
            beta.push(b);
            q.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let t = tridiagonal(&alpha, &beta[..k - 1]);
        let eig = SymmetricEigen::new(t);
        let low = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        let mut x = vec![0.0; dim];
        for (i, qi) in q.iter().take(k).enumerate() {
            axpy(eig.eigenvectors[(i, low)], qi, &mut x);
        }
        normalize_real(&mut x);
        h.apply_real(&x, &mut hx);
        let energy = dot(&x, &hx);
        residual = hx.iter().zip(&x).map(|(a, b)| (a - energy * b).powi(2)).sum::<f64>().sqrt();
        if residual <= tol {
            fix_sign(&mut x);
            return Ok((energy, StateVector::from_real(&x)));
        }
        start = x;
    }
    Err(Error::Numerical { message: "Lanczos ground state did not converge".into(), residual })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn normalize_real(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Largest-magnitude component positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Reusable Krylov workspace for `exp(-i H dt) ψ`.
#[derive(Debug)]
pub struct KrylovPropagator {
    settings: PropagationSettings,
    vectors: Vec<Vec<Complex64>>,
    work: Vec<Complex64>,
    matvecs: usize,
}

impl KrylovPropagator {
    pub fn new(settings: PropagationSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self { settings, vectors: Vec::new(), work: Vec::new(), matvecs: 0 })
    }

    pub fn settings(&self) -> &PropagationSettings {
        &self.settings
    }

    /// Total operator applications so far.
    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Overwrites `psi` with `exp(-i H dt) psi`, subdividing `dt` as needed to
    /// meet the local error bound.
    pub fn step<A: LinearOperator>(&mut self, psi: &mut [Complex64], h: &A, dt: f64) -> Result<()> {
        let dim = h.dim();
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
        }
        if !(dt >= 0.0) {
            return Err(Error::Domain(format!("time step must be >= 0, got {dt}")));
        }
        let m_max = self.settings.krylov_dim.min(dim.max(1));
        if self.vectors.len() < m_max + 1 || self.vectors.first().is_some_and(|v| v.len() != dim) {
            self.vectors = vec![vec![ZERO; dim]; m_max + 1];
            self.work = vec![ZERO; dim];
        }
        let tol = self.settings.step_tol;
        let mut remaining = dt;
        while remaining > 0.0 {
            let beta0 = norm(psi);
            if beta0 == 0.0 {
                return Ok(());
            }
            let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
            let mut beta: Vec<f64> = Vec::with_capacity(m_max);
            for (v, p) in self.vectors[0].iter_mut().zip(psi.iter()) {
                *v = p / beta0;
            }
            let mut breakdown = false;
            let mut converged: Option<Vec<Complex64>> = None;
            for j in 0..m_max {
                let (head, tail) = self.vectors.split_at_mut(j + 1);
                let w = &mut tail[0];
                h.apply(&head[j], w);
                self.matvecs += 1;
                let a = inner(&head[j], w).re;
                alpha.push(a);
                for qi in head.iter() {
                    let c = inner(qi, w);
                    w.iter_mut().zip(qi).for_each(|(wi, q)| *wi -= c * q);
                }
                let b = norm(w);
                let scale = alpha.iter().fold(1.0f64, |s, x| s.max(x.abs()));
                if b <= 1e-13 * scale {
                    breakdown = true;
                    break;
                }
                beta.push(b);
                w.iter_mut().for_each(|x| *x /= b);
                if j >= 1 {
                    let (coeffs, err) = small_exponential(&alpha, &beta, remaining, beta0);
                    if err <= tol {
                        converged = Some(coeffs);
                        break;
                    }
                }
            }
            let k = alpha.len();
            let (coeffs, tau) = match converged {
                Some(c) => (c, remaining),
                None => {
                    let mut tau = remaining;
                    loop {
                        let (c, err) = small_exponential(&alpha, &beta, tau, beta0);
                        if breakdown || err <= tol {
                            break (c, tau);
                        }
                        tau *= 0.5;
                        if tau < self.settings.dt_min {
                            return Err(Error::Numerical {
                                message: format!("Krylov step fell below dt_min={} at krylov_dim={k}", self.settings.dt_min),
                                residual: err,
                            });
                        }
                    }
                }
            };
            self.work.iter_mut().for_each(|x| *x = ZERO);
            for (c, v) in coeffs.iter().zip(&self.vectors).take(k) {
                let s = c * beta0;
                self.work.iter_mut().zip(v).for_each(|(o, vi)| *o += s * vi);
            }
            psi.copy_from_slice(&self.work);
            remaining -= tau;
            if remaining < 1e-15 * dt {
                remaining = 0.0;
            }
        }
        Ok(())
    }
}

/// Coefficients of `exp(-i T tau) e1` in the Lanczos basis and the a posteriori
/// error estimate `beta0 * beta_k * |c_k|` for the truncated subspace.
fn small_exponential(alpha: &[f64], beta: &[f64], tau: f64, beta0: f64) -> (Vec<Complex64>, f64) {
    let k = alpha.len();
    let eig = SymmetricEigen::new(tridiagonal(alpha, &beta[..k.saturating_sub(1).min(beta.len())]));
    let coeffs: Vec<Complex64> = (0..k)
        .map(|i| {
            (0..k)
                .map(|l| {
                    let phase = Complex64::from_polar(1.0, -eig.eigenvalues[l] * tau);
                    phase * (eig.eigenvectors[(i, l)] * eig.eigenvectors[(0, l)])
                })
                .sum()
        })
        .collect();
    let err = if beta.len() >= k { beta0 * beta[k - 1] * coeffs[k - 1].norm() } else { 0.0 };
    (coeffs, err)
}

/// Single step `exp(-i H dt) ψ`.
pub fn evolve_step<A: LinearOperator>(
    psi: &StateVector,
    h: &A,
    dt: f64,
    settings: &PropagationSettings,
) -> Result<StateVector> {
    let mut prop = KrylovPropagator::new(*settings)?;
    let mut out = psi.clone();
    prop.step(&mut out.amplitudes, h, dt)?;
    out.time += dt;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScheduleRun {
    pub state: StateVector,
    pub steps: usize,
    pub matvecs: usize,
    /// Largest `| ‖ψ(t)‖ - ‖ψ(t0)‖ |` seen at any step.
    pub max_norm_drift: f64,
}

/// Evolves `psi0` from `psi0.time` to `t_end` under `H(bias(t))` with the
/// midpoint rule. `observer(state, bias)` fires at the start, every
/// `sample_stride` steps, and at the end.
pub fn evolve_schedule<F, O>(
    psi0: &StateVector,
    ham: &LadderHamiltonian,
    bias: F,
    t_end: f64,
    settings: &PropagationSettings,
    mut observer: O,
) -> Result<ScheduleRun>
where
    F: Fn(f64) -> f64,
    O: FnMut(&StateVector, f64) -> Result<()>,
{
    evolve_with_step(psi0, ham, bias, t_end, settings.dt, settings, settings.sample_stride, &mut observer)
}

/// As [`evolve_schedule`] with an explicit step and sampling stride.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with_step<F, O>(
    psi0: &StateVector,
    ham: &LadderHamiltonian,
    bias: F,
    t_end: f64,
    dt: f64,
    settings: &PropagationSettings,
    stride: usize,
    observer: &mut O,
) -> Result<ScheduleRun>
where
    F: Fn(f64) -> f64,
    O: FnMut(&StateVector, f64) -> Result<()>,
{
    if psi0.dim() != ham.dim() {
        return Err(Error::DimensionMismatch { expected: ham.dim(), got: psi0.dim() });
    }
    let t0 = psi0.time;
    let span = t_end - t0;
    if span < 0.0 {
        return Err(Error::Domain(format!("schedule ends at {t_end} before start {t0}")));
    }
    if span > settings.max_time {
        return Err(Error::Config(format!("schedule span {span} exceeds max_time {}", settings.max_time)));
    }
    let stride = stride.max(1);
    let steps = if span == 0.0 { 0 } else { ((span / dt) - 1e-9).ceil().max(1.0) as usize };
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };
    let mut prop = KrylovPropagator::new(*settings)?;
    let mut state = psi0.clone();
    let norm0 = state.norm();
    let mut drift = 0.0f64;
    observer(&state, bias(t0))?;
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let mid = bias(t + 0.5 * h);
        prop.step(&mut state.amplitudes, &ham.at(mid), h)?;
        state.time = t0 + (s + 1) as f64 * h;
        drift = drift.max((state.norm() - norm0).abs());
        if (s + 1) % stride == 0 || s + 1 == steps {
            observer(&state, bias(state.time))?;
        }
    }
    Ok(ScheduleRun { state, steps, matvecs: prop.matvecs(), max_norm_drift: drift })
}
