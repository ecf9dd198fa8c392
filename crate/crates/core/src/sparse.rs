//! Compressed sparse row storage for the assembled FE operators.

use nalgebra::DMatrix;

/// Real sparse matrix in CSR layout with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds from unordered triplets. Duplicates are summed; explicit zeros are kept
    /// so that the sparsity pattern of an assembled operator does not depend on values.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        // stable: duplicates are summed in insertion order
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
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
        self.data.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Iterates `(col, value)` over the stored entries of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    /// Iterates all stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(k) => self.data[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, v)| i == j || v == 0.0)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `Σ c_k M_k` over matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        assert!(!terms.is_empty());
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut t = Vec::new();
        for &(c, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch");
            t.extend(m.triplets().map(|(i, j, v)| (i, j, c * v)));
        }
        Self::from_triplets(nrows, ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|M - Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `Mᵀ x` without forming the transpose.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.triplets() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..self.nrows {
                y[(i, c)] = self.row(i).map(|(j, v)| v * col[j]).sum();
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `Vᵀ M V` for a dense column block `V`.
    pub fn congruence(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        v.transpose() * self.mul_dense(v)
    }

    /// Indices of rows holding at least one nonzero value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.nrows)
            .filter(|&i| self.row(i).any(|(_, v)| v != 0.0))
            .collect()
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &old_i) in rows.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if col_map[j] != usize::MAX {
                    t.push((new_i, col_map[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn transpose_and_products_agree_with_dense() {
        let m = CsrMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (0, 1, -2.0), (2, 1, 5.0), (1, 0, 0.5)]);
        let d = m.to_dense();
        let x = vec![0.3, -1.1];
        let y = m.mul_vec(&x);
        let yd = &d * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((y[i] - yd[i]).abs() < 1e-15);
        }
        assert_eq!(m.transpose().to_dense(), d.transpose());
        let z = vec![1.0, 2.0, 3.0];
        assert_eq!(m.tr_mul_vec(&z), m.transpose().mul_vec(&z));
    }

    #[test]
    fn asymmetry_detects_nonsymmetric_entries() {
        let s = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(s.asymmetry(), 0.0);
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]);
        assert_eq!(a.asymmetry(), 1.0);
    }

    #[test]
    fn select_reorders_rows_and_columns() {
        let m = CsrMatrix::from_dense(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
        ));
        let s = m.select(&[2, 0], &[1, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[8.0, 9.0, 2.0, 3.0]));
    }
}
