//! Fixed-particle-number Fock space of a two-leg ladder.
//!
//! Sites are flattened leg-major: all rungs of the left leg first, then all
//! rungs of the right leg, so `site = leg * L_s + rung`. States are stored in
//! ascending lexicographic order of their occupation vectors, which makes
//! lookup a binary search.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two chains of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    Left,
    Right,
}

impl Leg {
    pub const BOTH: [Leg; 2] = [Leg::Left, Leg::Right];

    pub fn offset(self) -> usize {
        match self {
            Leg::Left => 0,
            Leg::Right => 1,
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leg::Left => f.write_str("L"),
            Leg::Right => f.write_str("R"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderGeometry {
    rungs: usize,
}

impl LadderGeometry {
    pub fn new(rungs: usize) -> Result<Self> {
        if rungs == 0 {
            return Err(Error::Config("ladder needs at least one rung (L_s >= 1)".into()));
        }
        Ok(Self { rungs })
    }

    /// Number of rungs, `L_s`.
    pub fn rungs(&self) -> usize {
        self.rungs
    }

    pub fn sites(&self) -> usize {
        2 * self.rungs
    }

    pub fn site(&self, leg: Leg, rung: usize) -> usize {
        debug_assert!(rung < self.rungs);
        leg.offset() * self.rungs + rung
    }

    pub fn leg_rung(&self, site: usize) -> (Leg, usize) {
        if site < self.rungs {
            (Leg::Left, site)
        } else {
            (Leg::Right, site - self.rungs)
        }
    }

    /// Flat indices of the sites belonging to one leg, in rung order.
    pub fn leg_sites(&self, leg: Leg) -> std::ops::Range<usize> {
        let start = leg.offset() * self.rungs;
        start..start + self.rungs
    }
}

/// Occupation numbers of every site, in flat site order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(pub Vec<u8>);

impl FockState {
    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }
}

/// Number of ways to place `particles` bosons on `sites` sites with at most
/// `cap` per site.
pub fn count_states(sites: usize, particles: usize, cap: usize) -> usize {
    // ways[p] = number of fillings of the sites seen so far with p particles
    let mut ways = vec![0usize; particles + 1];
    ways[0] = 1;
    for _ in 0..sites {
        let mut next = vec![0usize; particles + 1];
        for (p, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=cap.min(particles - p) {
                next[p + k] = next[p + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[particles]
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    geometry: LadderGeometry,
    particles: usize,
    n_max: usize,
    /// Row-major `dim x sites` table of occupations.
    occupations: Vec<u8>,
}

impl FockBasis {
    /// Enumerates every state with `particles` bosons and at most `n_max` per site.
    pub fn new(geometry: LadderGeometry, particles: usize, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Config("occupation cap n_max must be at least 1".into()));
        }
        if n_max > u8::MAX as usize {
            return Err(Error::Config(format!("occupation cap {n_max} exceeds 255")));
        }
        let sites = geometry.sites();
        if sites * n_max < particles {
            return Err(Error::Config(format!(
                "cap n_max={n_max} on {sites} sites cannot hold N={particles} particles"
            )));
        }
        let dim = count_states(sites, particles, n_max);
        let mut occupations = Vec::with_capacity(dim * sites);
        let mut current = vec![0u8; sites];
        fill(&mut current, 0, particles, n_max, &mut occupations);
        debug_assert_eq!(occupations.len(), dim * sites);
        Ok(Self { geometry, particles, n_max, occupations })
    }

    /// Default per-site cap: `min(N, 4)`, never below 1.
    pub fn default_cap(particles: usize) -> usize {
        particles.clamp(1, 4)
    }

    pub fn geometry(&self) -> LadderGeometry {
        self.geometry
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn sites(&self) -> usize {
        self.geometry.sites()
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.sites()
    }

    /// Occupation slice of the state with ordinal `index`.
    pub fn occupations(&self, index: usize) -> &[u8] {
        let s = self.sites();
        &self.occupations[index * s..(index + 1) * s]
    }

    pub fn state_of(&self, index: usize) -> FockState {
        FockState(self.occupations(index).to_vec())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.occupations.chunks_exact(self.sites())
    }

    /// Ordinal of a state, validating particle number and cap.
    pub fn index_of(&self, state: &FockState) -> Result<usize> {
        let occ = state.occupations();
        if occ.len() != self.sites() {
            return Err(Error::Domain(format!(
                "state has {} sites, basis has {}",
                occ.len(),
                self.sites()
            )));
        }
        if state.total() != self.particles {
            return Err(Error::Domain(format!(
                "state holds {} particles, basis has N={}",
                state.total(),
                self.particles
            )));
        }
        if occ.iter().any(|&n| n as usize > self.n_max) {
            return Err(Error::Domain(format!("state exceeds occupation cap {}", self.n_max)));
        }
        self.find(occ)
            .ok_or_else(|| Error::Domain("state not found in basis".into()))
    }

    /// Binary search for an occupation vector; `None` when it is outside the basis.
    pub fn find(&self, occ: &[u8]) -> Option<usize> {
        let (mut lo, mut hi) = (0usize, self.dim());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.occupations(mid).cmp(occ) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Number of particles in `leg` for state `index`.
    pub fn leg_count(&self, index: usize, leg: Leg) -> usize {
        let occ = self.occupations(index);
        self.geometry.leg_sites(leg).map(|s| occ[s] as usize).sum()
    }

    /// Rough resident size of the basis plus a Hamiltonian in CSR form, in bytes.
    pub fn memory_estimate(&self) -> usize {
        let dim = self.dim();
        let sites = self.sites();
        // hopping bonds: L_s rungs + 2 (L_s - 1) leg bonds, each contributes two entries
        let bonds = self.geometry.rungs() + 2 * self.geometry.rungs().saturating_sub(1);
        let nnz_per_row = 1 + 2 * bonds;
        let csr = dim * nnz_per_row * (8 + 8) + (dim + 1) * 8;
        dim * sites + csr
    }
}

fn fill(current: &mut [u8], site: usize, remaining: usize, cap: usize, out: &mut Vec<u8>) {
    let sites = current.len();
    if site + 1 == sites {
        if remaining <= cap {
            current[site] = remaining as u8;
            out.extend_from_slice(current);
        }
        return;
    }
    let rest = sites - site - 1;
    for k in 0..=cap.min(remaining) {
        if (remaining - k) > rest * cap {
            continue;
        }
        current[site] = k as u8;
        fill(current, site + 1, remaining - k, cap, out);
    }
    current[site] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_count(sites: usize, particles: usize, cap: usize) -> usize {
        let total = (cap + 1).pow(sites as u32);
        (0..total)
            .filter(|&code| {
                let mut c = code;
                let mut sum = 0;
                for _ in 0..sites {
                    sum += c % (cap + 1);
                    c /= cap + 1;
                }
                sum == particles
            })
            .count()
    }

    #[test]
    fn small_dimensions() {
        let g1 = LadderGeometry::new(1).unwrap();
        assert_eq!(FockBasis::new(g1, 1, 1).unwrap().dim(), 2);
        let g2 = LadderGeometry::new(2).unwrap();
        assert_eq!(FockBasis::new(g2, 2, 2).unwrap().dim(), 10);
        assert_eq!(FockBasis::new(g2, 2, 5).unwrap().dim(), 10);
        assert_eq!(FockBasis::new(g2, 2, 1).unwrap().dim(), 6);
    }

    #[test]
    fn dimension_matches_brute_force() {
        for rungs in 1..=3 {
            let g = LadderGeometry::new(rungs).unwrap();
            for n in 0..=4 {
                for cap in 1..=4 {
                    if 2 * rungs * cap < n {
                        assert!(FockBasis::new(g, n, cap).is_err());
                        continue;
                    }
                    let basis = FockBasis::new(g, n, cap).unwrap();
                    assert_eq!(basis.dim(), brute_force_count(2 * rungs, n, cap), "L_s={rungs} N={n} cap={cap}");
                    assert_eq!(count_states(2 * rungs, n, cap), basis.dim());
                }
            }
        }
    }

    #[test]
    fn ordering_and_round_trip() {
        let g = LadderGeometry::new(3).unwrap();
        let basis = FockBasis::new(g, 4, 3).unwrap();
        for j in 1..basis.dim() {
            assert!(basis.occupations(j - 1) < basis.occupations(j));
        }
        for j in 0..basis.dim() {
            assert_eq!(basis.index_of(&basis.state_of(j)).unwrap(), j);
        }
        let again = FockBasis::new(g, 4, 3).unwrap();
        assert_eq!(basis.occupations, again.occupations);
    }

    #[test]
    fn all_left_state_is_last() {
        let g = LadderGeometry::new(2).unwrap();
        let basis = FockBasis::new(g, 2, 2).unwrap();
        let leftmost = FockState(vec![2, 0, 0, 0]);
        let idx = basis.index_of(&leftmost).unwrap();
        assert_eq!(idx, basis.dim() - 1);
        assert_eq!(basis.state_of(idx), leftmost);
    }

    #[test]
    fn invalid_states_rejected() {
        let g = LadderGeometry::new(2).unwrap();
        let basis = FockBasis::new(g, 2, 1).unwrap();
        assert!(matches!(basis.index_of(&FockState(vec![1, 1, 1, 0])), Err(Error::Domain(_))));
        assert!(matches!(basis.index_of(&FockState(vec![2, 0, 0, 0])), Err(Error::Domain(_))));
        assert!(matches!(basis.index_of(&FockState(vec![1, 1, 0])), Err(Error::Domain(_))));
    }

    #[test]
    fn infeasible_cap() {
        let g = LadderGeometry::new(1).unwrap();
        assert!(matches!(FockBasis::new(g, 3, 1), Err(Error::Config(_))));
        assert!(matches!(FockBasis::new(g, 1, 0), Err(Error::Config(_))));
        assert!(LadderGeometry::new(0).is_err());
    }

    #[test]
    fn leg_counts() {
        let g = LadderGeometry::new(2).unwrap();
        let basis = FockBasis::new(g, 3, 3).unwrap();
        let idx = basis.index_of(&FockState(vec![1, 0, 0, 2])).unwrap();
        assert_eq!(basis.leg_count(idx, Leg::Left), 1);
        assert_eq!(basis.leg_count(idx, Leg::Right), 2);
        assert_eq!(g.site(Leg::Right, 1), 3);
        assert_eq!(g.leg_rung(3), (Leg::Right, 1));
    }
}
