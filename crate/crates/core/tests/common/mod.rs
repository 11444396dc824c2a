//! Naive reference implementations used as oracles. Nothing here goes through
//! the library's basis indexing or sparse assembly.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every occupation tuple over `sites` with total `n` and per-site cap, by
/// exhaustive enumeration of all `(cap+1)^sites` tuples.
pub fn enumerate_states(sites: usize, n: usize, cap: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let total = (cap + 1).pow(sites as u32);
    for code in 0..total {
        let mut c = code;
        let mut occ = vec![0u8; sites];
        for o in occ.iter_mut() {
            *o = (c % (cap + 1)) as u8;
            c /= cap + 1;
        }
        if occ.iter().map(|&x| x as usize).sum::<usize>() == n {
            out.push(occ);
        }
    }
    out
}

/// Site index of `(leg, rung)` with the left leg first.
pub fn site(leg: usize, rung: usize, rungs: usize) -> usize {
    leg * rungs + rung
}

/// Ladder bonds `(a, b, t)` with open legs.
pub fn ladder_bonds(rungs: usize, j_par: f64) -> Vec<(usize, usize, f64)> {
    let mut b = Vec::new();
    for r in 0..rungs {
        b.push((site(0, r, rungs), site(1, r, rungs), 1.0));
    }
    for leg in 0..2 {
        for r in 0..rungs.saturating_sub(1) {
            b.push((site(leg, r, rungs), site(leg, r + 1, rungs), j_par));
        }
    }
    b
}

/// `b†_to b_from` applied to one occupation tuple.
pub fn hop(occ: &[u8], to: usize, from: usize, cap: usize) -> Option<(Vec<u8>, f64)> {
    if occ[from] == 0 || (to != from && occ[to] as usize >= cap) {
        return None;
    }
    let mut next = occ.to_vec();
    let amp_from = (occ[from] as f64).sqrt();
    next[from] -= 1;
    let amp_to = ((next[to] + 1) as f64).sqrt();
    next[to] += 1;
    Some((next, amp_from * amp_to))
}

/// Dense ladder Hamiltonian built term by term on the naive state list.
pub fn naive_hamiltonian(
    states: &[Vec<u8>],
    bonds: &[(usize, usize, f64)],
    u: f64,
    bias_sites: &[usize],
    delta: f64,
    cap: usize,
) -> DMatrix<f64> {
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let d = states.len();
    let mut h = DMatrix::zeros(d, d);
    for (j, s) in states.iter().enumerate() {
        for &(a, b, t) in bonds {
            for (to, from) in [(a, b), (b, a)] {
                if let Some((next, amp)) = hop(s, to, from, cap) {
                    let i = index[next.as_slice()];
                    h[(i, j)] -= t * amp;
                }
            }
        }
        let onsite: f64 = s.iter().map(|&n| 0.5 * u * n as f64 * (n as f64 - 1.0)).sum();
        let bias: f64 = bias_sites.iter().map(|&x| s[x] as f64).sum::<f64>() * delta;
        h[(j, j)] += onsite + bias;
    }
    h
}

/// Ladder Hamiltonian on the naive state list with the right leg biased.
pub fn naive_ladder(rungs: usize, n: usize, cap: usize, j_par: f64, u: f64, delta: f64) -> (Vec<Vec<u8>>, DMatrix<f64>) {
    let states = enumerate_states(2 * rungs, n, cap);
    let right: Vec<usize> = (0..rungs).map(|r| site(1, r, rungs)).collect();
    let h = naive_hamiltonian(&states, &ladder_bonds(rungs, j_par), u, &right, delta, cap);
    (states, h)
}

/// `<ψ| b†_m b_s |ψ>` by applying the operator to every component.
pub fn naive_correlator(states: &[Vec<u8>], psi: &[Complex64], m: usize, s: usize) -> Complex64 {
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, st)| (st.as_slice(), i)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, st) in states.iter().enumerate() {
        if let Some((next, amp)) = hop(st, m, s, usize::MAX) {
            if let Some(&i) = index.get(next.as_slice()) {
                acc += psi[i].conj() * psi[j] * amp;
            }
        }
    }
    acc
}

/// Von Neumann entropy of subsystem `a_sites` by explicit partial trace.
pub fn naive_entropy(states: &[Vec<u8>], psi: &[Complex64], a_sites: &[usize]) -> f64 {
    let split = |s: &[u8]| -> (Vec<u8>, Vec<u8>) {
        let a = a_sites.iter().map(|&x| s[x]).collect();
        let b = (0..s.len()).filter(|x| !a_sites.contains(x)).map(|x| s[x]).collect();
        (a, b)
    };
    let mut a_keys: Vec<Vec<u8>> = states.iter().map(|s| split(s).0).collect();
    a_keys.sort();
    a_keys.dedup();
    let a_index: HashMap<Vec<u8>, usize> = a_keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let na = a_keys.len();
    let mut rho = DMatrix::from_element(na, na, Complex64::new(0.0, 0.0));
    for (i, si) in states.iter().enumerate() {
        let (ai, bi) = split(si);
        for (j, sj) in states.iter().enumerate() {
            let (aj, bj) = split(sj);
            if bi == bj {
                rho[(a_index[&ai], a_index[&aj])] += psi[i] * psi[j].conj();
            }
        }
    }
    SymmetricEigen::new(rho)
        .eigenvalues
        .iter()
        .filter(|&&p| p > 1e-14)
        .map(|&p| -p * p.ln())
        .sum()
}

pub fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Deterministic normalized complex vector.
pub fn pseudo_random_state(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}
