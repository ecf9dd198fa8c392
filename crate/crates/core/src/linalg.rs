//! Small dense helpers shared by the reduced-model code.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{KmsError, Result};

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut a = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            a = a.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    a
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen_sorted(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// `a φ = λ e φ` for symmetric `a` and symmetric positive definite `e`.
/// Eigenvalues ascending, eigenvectors `e`-orthonormal.
pub fn pencil_eigen(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let chol = symmetrize(e)
        .cholesky()
        .ok_or_else(|| KmsError::invariant("reduced E", "positive definiteness", "Cholesky factorization failed"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| KmsError::invariant("reduced E", "positive definiteness", "singular factor"))?;
    let c = &linv * a * linv.transpose();
    let (vals, y) = sym_eigen_sorted(&c);
    let phi = linv.transpose() * y;
    Ok((vals, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_matches_scalar_case() {
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -6.0]);
        let e = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let (vals, phi) = pencil_eigen(&a, &e).unwrap();
        assert!((vals[0] + 2.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
        let g = phi.transpose() * e * &phi;
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-14);
    }
}
