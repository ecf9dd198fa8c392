//! Parametric extension of a KMS basis for convective boundaries, and checks of
//! how the spectrum moves with the heat transfer coefficients.

use serde::{Deserialize, Serialize};

use crate::analysis::{compare_eigenvalues, EigenComparison};
use crate::error::{KmsError, Result};
use crate::model::{ParameterSample, ThermalSystem};
use crate::reduction::{
    orth, smallest_eigenpairs, ColumnTag, ModalOptions, Orthonormalizer, ReducedModel, ReductionBasis, ShiftedSolver,
    DROP_TOL,
};

/// Appends `V_i^k = (s_e E − A)⁻¹ D_i V_i^{k−1}`, `V_i^0 = V_KMS`, for every patch `i` and
/// `k = 1..n_me`.
///
/// Each chain is orthonormalized on its own, then every stage is inserted into the global
/// basis in patch order (stages inner), orthogonalized against all columns so far.
/// One factorization at `kms.s_e` serves every solve.
pub fn bilinear_extend(system: &ThermalSystem, kms: &ReductionBasis, n_me: usize) -> Result<ReductionBasis> {
    if kms.n() != system.n() {
        return Err(KmsError::dim("basis rows", system.n(), kms.n()));
    }
    let r = kms.r();
    let n_c = system.num_patches();
    if n_me > 0 {
        if let Some((i, nd)) = system.patch_dofs().into_iter().enumerate().min_by_key(|(_, nd)| *nd) {
            if n_me >= nd {
                return Err(KmsError::InvalidInput(format!(
                    "n_me = {n_me} must be below the {nd} dofs of patch '{}'",
                    system.patch_names[i]
                )));
            }
        }
    }
    let mut out = ReductionBasis {
        n_me,
        pre_deflation_width: r * (1 + n_me * n_c),
        ..kms.clone()
    };
    if n_me == 0 || n_c == 0 || r == 0 {
        return Ok(out);
    }
    let solver = ShiftedSolver::new(system, kms.s_e, None)?;
    let mut acc = Orthonormalizer::from_orthonormal(&kms.v, DROP_TOL);
    for (i, d) in system.d.iter().enumerate() {
        let mut prev = kms.v.clone();
        for stage in 1..=n_me {
            let next = solver.solve_block(&d.mul_dense(&prev));
            prev = orth(&next);
            for kept in acc.extend(&prev) {
                if kept {
                    out.tags.push(ColumnTag::Bilinear { patch: i, stage });
                }
            }
            if prev.ncols() == 0 {
                break;
            }
        }
    }
    out.v = acc.matrix(system.n());
    log::info!(
        "bilinear extension: {} candidate columns, {} after deflation",
        out.pre_deflation_width,
        out.r()
    );
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub lower: ParameterSample,
    pub upper: ParameterSample,
    /// `α_j` at the lower sample, by `|α|` ascending.
    pub alpha_lower: Vec<f64>,
    pub alpha_upper: Vec<f64>,
    /// Indices `j` with `α_j(upper) > α_j(lower) + slack`.
    pub violations: Vec<usize>,
    pub slack: f64,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const MONOTONICITY_SLACK: f64 = 1e-10;

/// Checks `α_j(h_m) ≤ α_j(h_l)` for the `k` smallest-magnitude eigenvalues, `h_l ≤ h_m`.
pub fn eigen_monotonicity_check(
    system: &ThermalSystem,
    lower: &ParameterSample,
    upper: &ParameterSample,
    k: usize,
) -> Result<MonotonicityReport> {
    system.check_sample(lower)?;
    system.check_sample(upper)?;
    if !lower.dominated_by(upper) {
        return Err(KmsError::InvalidInput(format!(
            "{} is not below {} in every component",
            lower.label(),
            upper.label()
        )));
    }
    let opts = ModalOptions::default();
    let alpha_lower = smallest_eigenpairs(system, lower, k, &opts)?.eigenvalues;
    let alpha_upper = smallest_eigenpairs(system, upper, k, &opts)?.eigenvalues;
    let violations = (0..k)
        .filter(|&j| alpha_upper[j] > alpha_lower[j] + MONOTONICITY_SLACK)
        .collect();
    Ok(MonotonicityReport {
        lower: lower.clone(),
        upper: upper.clone(),
        alpha_lower,
        alpha_upper,
        violations,
        slack: MONOTONICITY_SLACK,
    })
}

/// `|(α̃_i − α_i)/α_i|` for the first `k` nonzero modes.
pub fn reduced_eigen_error(
    full: &ThermalSystem,
    reduced: &ReducedModel,
    sample: &ParameterSample,
    k: usize,
) -> Result<Vec<EigenComparison>> {
    compare_eigenvalues(full, reduced, sample, k)
}
