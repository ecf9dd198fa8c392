use nalgebra::{DMatrix, DVector};

use super::ortho::{Orthonormalizer, DROP_TOL};
use crate::error::{KmsError, Result};
use crate::model::{ParameterSample, ThermalSystem};
use crate::skyline::LdltFactor;
use crate::sparse::CsrMatrix;

/// Factorization of `s E − A_d`, `A_d = A + Σ h_i D_i`, shared by every solve at `s`.
pub struct ShiftedSolver {
    factor: LdltFactor<f64>,
    pub s: f64,
}

impl ShiftedSolver {
    pub fn new(system: &ThermalSystem, s: f64, sample: Option<&ParameterSample>) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(KmsError::InvalidInput(format!(
                "expansion point must be positive, got {s}"
            )));
        }
        let zero = ParameterSample::zeros(system.num_patches());
        let sample = sample.unwrap_or(&zero);
        system.check_sample(sample)?;
        let mut terms: Vec<(f64, &CsrMatrix)> = vec![(s, &system.e), (-1.0, &system.a)];
        for (h, d) in sample.values().iter().zip(&system.d) {
            if *h != 0.0 {
                terms.push((-h, d));
            }
        }
        let factor = LdltFactor::factor_combination(&terms, "s_e E - A")?;
        Ok(Self { factor, s })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }

    /// Column-wise solves, in parallel when the `parallel` feature is on.
    pub fn solve_block(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let cols: Vec<Vec<f64>> = rhs.column_iter().map(|c| c.iter().copied().collect()).collect();
        let solved = crate::par::map(&cols, |c| self.factor.solve(c));
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for (j, x) in solved.into_iter().enumerate() {
            out.column_mut(j).copy_from_slice(&x);
        }
        out
    }
}

/// Orthonormal basis of the block Krylov space
/// `K_moments((sE − A_d)⁻¹E, (sE − A_d)⁻¹ rhs)`, with deflation.
pub fn build_krylov_block(
    system: &ThermalSystem,
    s_e: f64,
    rhs: &DMatrix<f64>,
    moments: usize,
    sample: Option<&ParameterSample>,
) -> Result<DMatrix<f64>> {
    if rhs.nrows() != system.n() {
        return Err(KmsError::dim("Krylov right-hand side rows", system.n(), rhs.nrows()));
    }
    if moments == 0 {
        return Err(KmsError::InvalidInput("at least one moment is required".into()));
    }
    let solver = ShiftedSolver::new(system, s_e, sample)?;
    Ok(krylov_with(&solver, &system.e, rhs, moments))
}

fn krylov_with(solver: &ShiftedSolver, e: &CsrMatrix, rhs: &DMatrix<f64>, moments: usize) -> DMatrix<f64> {
    let n = rhs.nrows();
    let mut ortho = Orthonormalizer::new(DROP_TOL);
    let mut block = solver.solve_block(rhs);
    for k in 0..moments {
        let start = ortho.len();
        ortho.extend(&block);
        let fresh: Vec<DVector<f64>> = ortho.columns()[start..].to_vec();
        if fresh.is_empty() || k + 1 == moments {
            break;
        }
        let next = DMatrix::from_columns(&fresh);
        block = solver.solve_block(&e.mul_dense(&next));
    }
    ortho.matrix(n)
}
