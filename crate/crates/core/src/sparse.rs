//! Compressed sparse row storage for complex matrices.
//!
//! Everything here is plain numerics with no knowledge of the basis the
//! matrix acts on; [`crate::hilbert::SparseOperator`] adds that context.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed and exact
    /// zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn from_dense(m: &DMatrix<C64>, cutoff: f64) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)].norm() > cutoff {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as (column, value) pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// `y += alpha * A x`
    #[inline]
    pub fn mul_vec_acc(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr += alpha * acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_acc(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Principal submatrix on the given (sorted or unsorted) index list.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (new, &old) in indices.iter().enumerate() {
            pos[old] = new;
        }
        let mut t = Vec::new();
        for (new_r, &r) in indices.iter().enumerate() {
            for (c, v) in self.row(r) {
                if pos[c] != usize::MAX {
                    t.push((new_r, pos[c], v));
                }
            }
        }
        Self::from_triplets(indices.len(), indices.len(), t)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.ncols];
        for (_, c, v) in self.triplets() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let diff = self.add(&self.adjoint().scale(C64::new(-1.0, 0.0)));
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        diff.max_abs() / scale
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 0, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 0, c(1.0, 1.0)), (1, 2, c(0.0, 2.0))]);
        let b = CsrMatrix::from_triplets(3, 2, vec![(0, 1, c(2.0, 0.0)), (2, 0, c(1.0, -1.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert_eq!(a.matmul(&b).to_dense(), dense);
    }

    #[test]
    fn restrict_keeps_principal_block() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 2, c(1.0, 0.0)), (2, 0, c(1.0, 0.0)), (1, 1, c(5.0, 0.0))]);
        let r = m.restrict(&[0, 2]);
        assert_eq!(r.get(0, 1), c(1.0, 0.0));
        assert_eq!(r.nnz(), 2);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let h = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        assert!(h.hermiticity_defect() < 1e-15);
        let n = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0))]);
        assert!(n.hermiticity_defect() > 0.5);
    }
}
