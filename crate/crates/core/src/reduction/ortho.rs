use nalgebra::{DMatrix, DVector};

use crate::sparse::CsrMatrix;

/// Relative drop tolerance used for every rank decision.
pub const DROP_TOL: f64 = 1e-10;

/// Incrementally built column-orthonormal basis (Euclidean or `M`-inner product).
///
/// Each candidate is orthogonalized twice by modified Gram–Schmidt and dropped when
/// what is left is below `tol` times its original norm.
#[derive(Debug, Clone)]
pub struct Orthonormalizer<'m> {
    cols: Vec<DVector<f64>>,
    /// `M q_k` for every column when an inner-product matrix is set.
    mcols: Vec<DVector<f64>>,
    metric: Option<&'m CsrMatrix>,
    tol: f64,
}

impl<'m> Orthonormalizer<'m> {
    pub fn new(tol: f64) -> Self {
        Self {
            cols: Vec::new(),
            mcols: Vec::new(),
            metric: None,
            tol,
        }
    }

    /// Orthonormality with respect to `xᵀ M y` for a symmetric positive definite `M`.
    pub fn with_metric(metric: &'m CsrMatrix, tol: f64) -> Self {
        Self {
            metric: Some(metric),
            ..Self::new(tol)
        }
    }

    pub fn from_orthonormal(cols: &DMatrix<f64>, tol: f64) -> Self {
        let mut o = Self::new(tol);
        o.cols = cols.column_iter().map(|c| c.into_owned()).collect();
        o
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    fn apply_metric(&self, v: &DVector<f64>) -> DVector<f64> {
        match self.metric {
            Some(m) => DVector::from_vec(m.mul_vec(v.as_slice())),
            None => v.clone(),
        }
    }

    fn norm(&self, v: &DVector<f64>) -> f64 {
        match self.metric {
            Some(_) => v.dot(&self.apply_metric(v)).max(0.0).sqrt(),
            None => v.norm(),
        }
    }

    /// Removes the components along the current columns (twice).
    pub fn project_out(&self, v: &mut DVector<f64>) {
        for _ in 0..2 {
            let basis = if self.metric.is_some() { &self.mcols } else { &self.cols };
            for (q, mq) in self.cols.iter().zip(basis) {
                let c = mq.dot(v);
                v.axpy(-c, q, 1.0);
            }
        }
    }

    /// Orthogonalizes and appends `v`; returns `false` if it was deflated.
    pub fn push(&mut self, mut v: DVector<f64>) -> bool {
        let norm0 = self.norm(&v);
        if !(norm0 > 0.0) || !norm0.is_finite() {
            return false;
        }
        self.project_out(&mut v);
        let norm1 = self.norm(&v);
        if norm1 <= self.tol * norm0 {
            return false;
        }
        v /= norm1;
        if self.metric.is_some() {
            self.mcols.push(self.apply_metric(&v));
        }
        self.cols.push(v);
        true
    }

    /// Pushes every column of `block`; returns one keep flag per column.
    pub fn extend(&mut self, block: &DMatrix<f64>) -> Vec<bool> {
        block.column_iter().map(|c| self.push(c.into_owned())).collect()
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.cols
    }

    pub fn matrix(&self, nrows: usize) -> DMatrix<f64> {
        if self.cols.is_empty() {
            return DMatrix::zeros(nrows, 0);
        }
        DMatrix::from_columns(&self.cols)
    }
}

/// Orthonormal basis of `range(block)` with deflation.
pub fn orth(block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut o = Orthonormalizer::new(DROP_TOL);
    o.extend(block);
    o.matrix(block.nrows())
}

/// `max |VᵀV − I|`.
pub fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut err = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicate_columns_deflate() {
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        assert_eq!(orth(&b).ncols(), 1);
    }

    #[test]
    fn metric_orthonormality() {
        let m = CsrMatrix::from_diagonal(&[1.0, 4.0, 9.0]);
        let mut o = Orthonormalizer::with_metric(&m, DROP_TOL);
        o.push(DVector::from_vec(vec![1.0, 1.0, 0.0]));
        o.push(DVector::from_vec(vec![0.0, 1.0, 1.0]));
        let q = o.matrix(3);
        let g = q.transpose() * m.mul_dense(&q);
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    proptest! {
        #[test]
        fn reconstructs_vectors_in_span(
            vals in proptest::collection::vec(-1.0f64..1.0, 40),
            coef in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let b = DMatrix::from_column_slice(10, 4, &vals);
            let v = orth(&b);
            prop_assert!(orthonormality_error(&v) <= 1e-10);
            let x = &b * DVector::from_vec(coef);
            let back = &v * (v.transpose() * &x);
            prop_assert!((back - &x).amax() <= 1e-10 * (1.0 + x.amax()));
        }
    }
}
