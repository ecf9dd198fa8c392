//! Envelope (skyline) `L D Lᵀ` factorization for symmetric sparse matrices.
//!
//! Works for real symmetric and complex symmetric (not Hermitian) matrices. No pivoting
//! is performed; rows are reordered with reverse Cuthill-McKee to keep the envelope narrow.
//! All systems solved here are either definite or complex symmetric with a definite real
//! or imaginary part, for which every leading principal minor is nonsingular.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KmsError, Result};
use crate::sparse::CsrMatrix;

/// Field operations needed by the factorization.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn real_part(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn real_part(self) -> f64 {
        self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn real_part(self) -> f64 {
        self.re
    }
}

/// Relative pivot size below which a matrix is reported singular.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LdltFactor<T: Scalar> {
    n: usize,
    /// new index -> original index
    perm: Vec<usize>,
    /// original index -> new index
    iperm: Vec<usize>,
    first: Vec<usize>,
    rowptr: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

/// Reverse Cuthill-McKee ordering of a symmetric pattern given as lower-triangle pairs.
pub fn rcm_ordering(n: usize, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in pairs {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a farthest node of minimum degree)
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        dist[start] = 0;
        q.push_back(start);
        let mut far = start;
        while let Some(u) = q.pop_front() {
            if dist[u] > dist[far] || (dist[u] == dist[far] && degree[u] < degree[far]) {
                far = u;
            }
            for &v in &adj[u] {
                if !visited[v] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        (dist[far], far)
    };

    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..4 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| degree[v]);
            for v in nbrs {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

impl<T: Scalar> LdltFactor<T> {
    /// Factors the symmetric matrix whose lower triangle (`row >= col`) is given as triplets.
    /// Entries above the diagonal must be omitted; duplicates are summed.
    pub fn from_lower_triplets(
        n: usize,
        lower: &[(usize, usize, T)],
        context: &str,
        pivot_tol: Option<f64>,
    ) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = lower.iter().map(|&(i, j, _)| (i, j)).collect();
        let perm = rcm_ordering(n, &pairs);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in lower {
            let (a, b) = (iperm[i], iperm[j]);
            let (r, c) = if a >= b { (a, b) } else { (b, a) };
            first[r] = first[r].min(c);
        }
        let mut rowptr = vec![0usize; n + 1];
        for i in 0..n {
            rowptr[i + 1] = rowptr[i] + (i - first[i]);
        }
        let mut vals = vec![T::zero(); rowptr[n]];
        let mut diag = vec![T::zero(); n];
        for &(i, j, v) in lower {
            let (a, b) = (iperm[i], iperm[j]);
            let (r, c) = if a >= b { (a, b) } else { (b, a) };
            if r == c {
                diag[r] += v;
            } else {
                vals[rowptr[r] + (c - first[r])] += v;
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.modulus()));
        let mut f = Self {
            n,
            perm,
            iperm,
            first,
            rowptr,
            lower: vals,
            diag,
        };
        f.factorize(scale, context, pivot_tol)?;
        Ok(f)
    }

    fn factorize(&mut self, scale: f64, context: &str, pivot_tol: Option<f64>) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let (head, tail) = self.lower.split_at_mut(self.rowptr[i]);
            let row_i = &mut tail[..i - fi];
            // u_ij = a_ij - sum_k u_ik l_jk
            for j in fi..i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let row_j = &head[self.rowptr[j]..self.rowptr[j] + (j - fj)];
                let mut acc = T::zero();
                for k in start..j {
                    acc += row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] -= acc;
            }
            let mut d = self.diag[i];
            for k in fi..i {
                let u = row_i[k - fi];
                let l = u / self.diag[k];
                d -= u * l;
                row_i[k - fi] = l;
            }
            match pivot_tol {
                Some(tol) if d.modulus() <= tol * scale || !d.modulus().is_finite() => {
                    return Err(KmsError::Singular {
                        context: context.to_string(),
                        pivot: self.perm[i],
                        value: d.modulus(),
                    });
                }
                None if d.modulus() == 0.0 => {
                    // inertia counting only; nudge an exact zero pivot
                    d = T::from_real(f64::EPSILON * scale.max(f64::MIN_POSITIVE));
                }
                _ => {}
            }
            self.diag[i] = d;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn pivots(&self) -> &[T] {
        &self.diag
    }

    /// Solves `M x = b` for one right-hand side of the same scalar type.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.lower[self.rowptr[i]..self.rowptr[i + 1]];
            let mut acc = T::zero();
            for (k, &l) in row.iter().enumerate() {
                acc += l * y[fi + k];
            }
            y[i] -= acc;
        }
        for i in 0..self.n {
            y[i] = y[i] / self.diag[i];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.lower[self.rowptr[i]..self.rowptr[i + 1]];
            for (k, &l) in row.iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![T::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    #[allow(dead_code)]
    pub(crate) fn inverse_permutation(&self) -> &[usize] {
        &self.iperm
    }
}

impl LdltFactor<f64> {
    /// Factors a real symmetric CSR matrix (lower triangle is read).
    pub fn factor(m: &CsrMatrix, context: &str) -> Result<Self> {
        Self::factor_combination(&[(1.0, m)], context)
    }

    /// Factors `Σ c_k M_k` without forming the sum explicitly.
    pub fn factor_combination(terms: &[(f64, &CsrMatrix)], context: &str) -> Result<Self> {
        let n = check_square(terms, context)?;
        let lower = lower_triplets(terms);
        Self::from_lower_triplets(n, &lower, context, Some(DEFAULT_PIVOT_TOL))
    }

    /// Number of negative pivots of `Σ c_k M_k`; by Sylvester's law of inertia this equals
    /// the number of negative eigenvalues.
    pub fn negative_inertia(terms: &[(f64, &CsrMatrix)]) -> Result<usize> {
        let n = check_square(terms, "inertia")?;
        let lower = lower_triplets(terms);
        let f = Self::from_lower_triplets(n, &lower, "inertia", None)?;
        Ok(f.diag.iter().filter(|d| **d < 0.0).count())
    }

    pub fn solve_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col: Vec<f64> = b.column(c).iter().copied().collect();
            x.column_mut(c).copy_from_slice(&self.solve(&col));
        }
        x
    }

    /// Solves against complex right-hand sides by treating real and imaginary parts apart.
    pub fn solve_complex(&self, b: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        let xr = self.solve(&re);
        let xi = self.solve(&im);
        xr.into_iter().zip(xi).map(|(r, i)| Complex64::new(r, i)).collect()
    }
}

impl LdltFactor<Complex64> {
    /// Factors `Σ c_k M_k` with complex coefficients over real symmetric matrices.
    pub fn factor_complex_combination(terms: &[(Complex64, &CsrMatrix)], context: &str) -> Result<Self> {
        let real_terms: Vec<(f64, &CsrMatrix)> = terms.iter().map(|&(_, m)| (1.0, m)).collect();
        let n = check_square(&real_terms, context)?;
        let mut lower = Vec::new();
        for &(c, m) in terms {
            lower.extend(m.triplets().filter(|&(i, j, _)| i >= j).map(|(i, j, v)| (i, j, c * v)));
        }
        Self::from_lower_triplets(n, &lower, context, Some(DEFAULT_PIVOT_TOL))
    }
}

fn check_square(terms: &[(f64, &CsrMatrix)], context: &str) -> Result<usize> {
    let n = terms.first().map(|t| t.1.nrows()).unwrap_or(0);
    for (_, m) in terms {
        if m.nrows() != n || m.ncols() != n {
            return Err(KmsError::dim(context, n, m.ncols()));
        }
    }
    Ok(n)
}

fn lower_triplets(terms: &[(f64, &CsrMatrix)]) -> Vec<(usize, usize, f64)> {
    let mut lower = Vec::new();
    for &(c, m) in terms {
        lower.extend(m.triplets().filter(|&(i, j, _)| i >= j).map(|(i, j, v)| (i, j, c * v)));
    }
    lower
}
