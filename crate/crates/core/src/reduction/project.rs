use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::basis::{ColumnTag, ReductionBasis};
use super::ortho::{Orthonormalizer, DROP_TOL};
use crate::error::{KmsError, Result};
use crate::linalg::{asymmetry, symmetrize};
use crate::model::{input_scaling, scale_columns, InputChannel, ParameterSample, ThermalSystem};
use crate::sparse::CsrMatrix;

const PROJECTED_ASYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Thermal,
    Mechanical,
}

/// `Ẽ x̃' = (Ã + Σ h_i D̃_i) x̃ + B̃ u`, `y = C̃ x̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub d: Vec<DMatrix<f64>>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub basis: ReductionBasis,
    pub kind: ModelKind,
    pub inputs: Vec<InputChannel>,
    pub patch_names: Vec<String>,
    pub output_names: Vec<String>,
}

impl ReducedModel {
    pub fn r(&self) -> usize {
        self.e.nrows()
    }

    pub fn num_patches(&self) -> usize {
        self.d.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn check_sample(&self, sample: &ParameterSample) -> Result<()> {
        if sample.len() != self.num_patches() {
            return Err(KmsError::dim("parameter sample", self.num_patches(), sample.len()));
        }
        Ok(())
    }

    /// `Ã + Σ h_i D̃_i`.
    pub fn system_matrix(&self, sample: &ParameterSample) -> Result<DMatrix<f64>> {
        self.check_sample(sample)?;
        let mut m = self.a.clone();
        for (h, d) in sample.values().iter().zip(&self.d) {
            m += d * *h;
        }
        Ok(m)
    }

    pub fn effective_b(&self, sample: &ParameterSample) -> DMatrix<f64> {
        scale_columns(&self.b, &input_scaling(&self.inputs, self.num_inputs(), sample))
    }
}

/// Orthonormal basis of `span(modal) + span(krylov)`.
///
/// Modal columns are orthonormalized first (in the Euclidean sense) and keep their
/// `modal(k)` tags; Krylov columns are orthogonalized against them and deflated.
pub fn combine_kms(modal: &DMatrix<f64>, krylov: &DMatrix<f64>, s_e: f64, omega_m: f64) -> Result<ReductionBasis> {
    if modal.ncols() > 0 && krylov.ncols() > 0 && modal.nrows() != krylov.nrows() {
        return Err(KmsError::dim("KMS column sets", modal.nrows(), krylov.nrows()));
    }
    let n = if modal.ncols() > 0 {
        modal.nrows()
    } else {
        krylov.nrows()
    };
    let mut o = Orthonormalizer::new(DROP_TOL);
    let mut tags = Vec::new();
    for (k, col) in modal.column_iter().enumerate() {
        if o.push(col.into_owned()) {
            tags.push(ColumnTag::Modal(k));
        }
    }
    let mu = tags.len();
    for col in krylov.column_iter() {
        if o.push(col.into_owned()) {
            tags.push(ColumnTag::Krylov);
        }
    }
    Ok(ReductionBasis {
        v: o.matrix(n),
        tags,
        s_e,
        omega_m,
        mu,
        n_me: 0,
        pre_deflation_width: modal.ncols() + krylov.ncols(),
    })
}

fn projected(name: &str, m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = m.amax();
    let asym = asymmetry(&m);
    if asym > PROJECTED_ASYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(KmsError::invariant(
            name,
            "symmetry",
            format!("projected asymmetry {asym:e} relative to {scale:e}"),
        ));
    }
    Ok(symmetrize(&m))
}

pub(crate) fn congruence_checked(name: &str, m: &CsrMatrix, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    projected(name, m.congruence(v))
}

/// One-sided Galerkin projection of the thermal system onto `basis`.
pub fn project(system: &ThermalSystem, basis: &ReductionBasis) -> Result<ReducedModel> {
    if basis.n() != system.n() {
        return Err(KmsError::dim("basis rows", system.n(), basis.n()));
    }
    let v = &basis.v;
    let e = congruence_checked("reduced E", &system.e, v)?;
    let a = congruence_checked("reduced A", &system.a, v)?;
    let d = system
        .d
        .iter()
        .zip(&system.patch_names)
        .map(|(d, name)| congruence_checked(&format!("reduced D[{name}]"), d, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReducedModel {
        e,
        a,
        d,
        b: v.transpose() * &system.b,
        c: &system.c * v,
        basis: basis.clone(),
        kind: ModelKind::Thermal,
        inputs: system.inputs.clone(),
        patch_names: system.patch_names.clone(),
        output_names: system.output_names.clone(),
    })
}
