//! Compressed sparse row storage for the real symmetric ladder operators.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Anything that can be applied to a complex state vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `out = A * x`. `out` is overwritten.
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    hermitian: bool,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and explicit zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::Domain(format!("entry ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self { dim, row_ptr, col_idx, values, hermitian: false };
        m.drop_zeros();
        m.hermitian = m.is_symmetric();
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), triplets).expect("diagonal entries are in range")
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the stored pattern and values are exactly symmetric.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        match cols.binary_search(&col) {
            Ok(k) => self.values[self.row_ptr[row] + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, scale: f64) -> Result<CsrMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.dim {
            triplets.extend(self.row(r).map(|(c, v)| (r, c, v)));
            triplets.extend(other.row(r).map(|(c, v)| (r, c, scale * v)));
        }
        CsrMatrix::from_triplets(self.dim, triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    /// `<x|A|x>` for a complex vector (real for symmetric `A`).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (r, xr) in x.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += x[self.col_idx[k]] * self.values[k];
            }
            acc += (xr.conj() * row).re;
        }
        acc
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            *o = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_sort() {
        let m = CsrMatrix::from_triplets(3, vec![(2, 0, 1.0), (0, 2, 1.0), (1, 1, 2.0), (1, 1, 3.0), (0, 1, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 1), 5.0);
        assert!(m.is_hermitian());
        let m2 = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0)]).unwrap();
        assert!(!m2.is_hermitian());
        assert_eq!(m2.max_asymmetry(), 1.0);
        assert!(CsrMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (0, 2, -2.0), (2, 0, -2.0), (1, 2, 0.5), (2, 1, 0.5)]).unwrap();
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.0), Complex64::new(0.5, -1.0)];
        let mut y = [Complex64::default(); 3];
        m.apply(&x, &mut y);
        let d = m.to_dense();
        for r in 0..3 {
            let expect: Complex64 = (0..3).map(|c| x[c] * d[(r, c)]).sum();
            assert!((y[r] - expect).norm() < 1e-15);
        }
        let e: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        assert!((m.expectation(&x) - e).abs() < 1e-14);
    }

    #[test]
    fn add_scaled_checks_dims() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
        let b = CsrMatrix::from_diagonal(&[1.0, 1.0, 1.0]);
        assert!(matches!(a.add_scaled(&b, 1.0), Err(Error::DimensionMismatch { .. })));
        let c = a.add_scaled(&a, -1.0).unwrap();
        assert_eq!(c.nnz(), 0);
    }
}
