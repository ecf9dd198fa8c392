//! Reduced quasi-static mechanics driven by the reduced thermal state.
//!
//! The mechanical basis is one block of static Krylov vectors,
//! `orth(K⁻¹ [K_th V, K_th x_ref, B_ext])`, so every displacement field reachable from the
//! reduced thermal state (including the reference offset) and the external forces is
//! represented exactly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::analysis::{full_state_response, reduced_state_response, SystemTag, TransferModel};
use crate::error::{KmsError, Result};
use crate::model::{MechanicalSystem, ParameterSample, ThermalSystem};
use crate::reduction::{
    congruence_checked, ColumnTag, ModelKind, Orthonormalizer, ReducedModel, ReductionBasis, DROP_TOL,
};
use crate::skyline::LdltFactor;

/// `K_th V`.
pub fn thermal_body_forces(mech: &MechanicalSystem, basis: &ReductionBasis) -> Result<DMatrix<f64>> {
    if mech.thermal_dim() != basis.n() {
        return Err(KmsError::dim("K_th columns", basis.n(), mech.thermal_dim()));
    }
    Ok(mech.k_th.mul_dense(&basis.v))
}

/// Static Krylov basis for the mechanical system. `s_e_mech` is recorded only: without a
/// mass matrix the one-moment space is `K⁻¹·rhs` for any expansion point.
pub fn build_mech_basis(
    mech: &MechanicalSystem,
    thermal_basis: &ReductionBasis,
    s_e_mech: f64,
) -> Result<ReductionBasis> {
    let forces = thermal_body_forces(mech, thermal_basis)?;
    let n = mech.n();
    let ref_load = DVector::from_vec(mech.k_th.mul_vec(&mech.x_ref));
    let mut rhs = DMatrix::zeros(n, forces.ncols() + 1 + mech.b_ext.ncols());
    rhs.columns_mut(0, forces.ncols()).copy_from(&forces);
    rhs.column_mut(forces.ncols()).copy_from(&ref_load);
    rhs.columns_mut(forces.ncols() + 1, mech.b_ext.ncols())
        .copy_from(&mech.b_ext);
    let k = LdltFactor::factor(&mech.k, "K")?;
    let cols: Vec<Vec<f64>> = rhs.column_iter().map(|c| c.iter().copied().collect()).collect();
    let solved = crate::par::map(&cols, |c| k.solve(c));
    let mut o = Orthonormalizer::new(DROP_TOL);
    for x in solved {
        o.push(DVector::from_vec(x));
    }
    let r = o.len();
    Ok(ReductionBasis {
        v: o.matrix(n),
        tags: vec![ColumnTag::Krylov; r],
        s_e: s_e_mech,
        omega_m: 0.0,
        mu: 0,
        n_me: 0,
        pre_deflation_width: rhs.ncols(),
    })
}

/// `K̃ q = K̃_th x̃ − f̃_ref + B̃_ext u`, `y = C̃ q`.
#[derive(Debug, Clone)]
pub struct ReducedMechModel {
    pub k: DMatrix<f64>,
    /// `V_mechᵀ K_th V`.
    pub coupling: DMatrix<f64>,
    /// `V_mechᵀ K_th x_ref`.
    pub ref_load: DVector<f64>,
    pub b_ext: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub basis: ReductionBasis,
    pub kind: ModelKind,
    pub output_names: Vec<String>,
    chol: Cholesky<f64, Dyn>,
}

impl ReducedMechModel {
    pub fn new(
        k: DMatrix<f64>,
        coupling: DMatrix<f64>,
        ref_load: DVector<f64>,
        b_ext: DMatrix<f64>,
        c: DMatrix<f64>,
        basis: ReductionBasis,
        output_names: Vec<String>,
    ) -> Result<Self> {
        let chol = Cholesky::new(k.clone()).ok_or_else(|| {
            KmsError::invariant("reduced K", "positive definiteness", "Cholesky factorization failed")
        })?;
        Ok(Self {
            k,
            coupling,
            ref_load,
            b_ext,
            c,
            basis,
            kind: ModelKind::Mechanical,
            output_names,
            chol,
        })
    }

    pub fn r(&self) -> usize {
        self.k.nrows()
    }

    pub fn thermal_dim(&self) -> usize {
        self.coupling.ncols()
    }

    /// `C̃ K̃⁻¹ K̃_th`: outputs per unit reduced thermal state (no reference offset).
    pub fn static_map(&self) -> DMatrix<f64> {
        &self.c * self.chol.solve(&self.coupling)
    }
}

impl PartialEq for ReducedMechModel {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.coupling == other.coupling
            && self.ref_load == other.ref_load
            && self.b_ext == other.b_ext
            && self.c == other.c
            && self.basis == other.basis
            && self.output_names == other.output_names
    }
}

pub fn project_mechanical(
    mech: &MechanicalSystem,
    mech_basis: &ReductionBasis,
    thermal_basis: &ReductionBasis,
) -> Result<ReducedMechModel> {
    if mech_basis.n() != mech.n() {
        return Err(KmsError::dim("mechanical basis rows", mech.n(), mech_basis.n()));
    }
    let vm = &mech_basis.v;
    let k = congruence_checked("reduced K", &mech.k, vm)?;
    let coupling = vm.transpose() * thermal_body_forces(mech, thermal_basis)?;
    let ref_load = vm.transpose() * DVector::from_vec(mech.k_th.mul_vec(&mech.x_ref));
    ReducedMechModel::new(
        k,
        coupling,
        ref_load,
        vm.transpose() * &mech.b_ext,
        &mech.c * vm,
        mech_basis.clone(),
        mech.output_names.clone(),
    )
}

/// Output displacements for a reduced thermal state `x̃` (absolute temperatures) and
/// external forces `u_ext`.
pub fn evaluate_deformation(
    red: &ReducedMechModel,
    x_tilde: &DVector<f64>,
    u_ext: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x_tilde.len() != red.thermal_dim() {
        return Err(KmsError::dim("reduced thermal state", red.thermal_dim(), x_tilde.len()));
    }
    if u_ext.len() != red.b_ext.ncols() {
        return Err(KmsError::dim("external force inputs", red.b_ext.ncols(), u_ext.len()));
    }
    let rhs = &red.coupling * x_tilde - &red.ref_load + &red.b_ext * u_ext;
    Ok(&red.c * red.chol.solve(&rhs))
}

/// Full-order static reference `C K⁻¹ (K_th (x − x_ref) + B_ext u)`.
pub struct FullMechSolver<'a> {
    mech: &'a MechanicalSystem,
    k: LdltFactor<f64>,
}

impl<'a> FullMechSolver<'a> {
    pub fn new(mech: &'a MechanicalSystem) -> Result<Self> {
        Ok(Self {
            mech,
            k: LdltFactor::factor(&mech.k, "K")?,
        })
    }

    pub fn deformation(&self, x: &[f64], u_ext: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.mech.thermal_dim() {
            return Err(KmsError::dim("thermal state", self.mech.thermal_dim(), x.len()));
        }
        let mut f = DVector::from_vec(self.mech.thermal_load(x));
        f += &self.mech.b_ext * DVector::from_column_slice(u_ext);
        Ok(&self.mech.c * DVector::from_vec(self.k.solve(f.as_slice())))
    }

    fn static_complex(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.mech.c.nrows(), x.ncols());
        for j in 0..x.ncols() {
            let col: Vec<Complex64> = x.column(j).iter().copied().collect();
            let re: Vec<f64> = col.iter().map(|z| z.re).collect();
            let im: Vec<f64> = col.iter().map(|z| z.im).collect();
            let fr = self.mech.k_th.mul_vec(&re);
            let fi = self.mech.k_th.mul_vec(&im);
            let q: Vec<Complex64> = self.k.solve_complex(
                &fr.iter()
                    .zip(&fi)
                    .map(|(a, b)| Complex64::new(*a, *b))
                    .collect::<Vec<_>>(),
            );
            for i in 0..self.mech.c.nrows() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, qv) in self.mech.c.row(i).iter().zip(&q) {
                    acc += qv * *c;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Thermal inputs to mechanical outputs of the full coupled model:
/// `C_mech K⁻¹ K_th (sE − A_d)⁻¹ B_h`.
pub struct FullThermoMech<'a> {
    pub thermal: &'a ThermalSystem,
    solver: FullMechSolver<'a>,
}

impl<'a> FullThermoMech<'a> {
    pub fn new(thermal: &'a ThermalSystem, mech: &'a MechanicalSystem) -> Result<Self> {
        if mech.thermal_dim() != thermal.n() {
            return Err(KmsError::dim("K_th columns", thermal.n(), mech.thermal_dim()));
        }
        Ok(Self {
            thermal,
            solver: FullMechSolver::new(mech)?,
        })
    }
}

impl TransferModel for FullThermoMech<'_> {
    fn num_inputs(&self) -> usize {
        self.thermal.num_inputs()
    }

    fn num_outputs(&self) -> usize {
        self.solver.mech.c.nrows()
    }

    fn tag(&self) -> SystemTag {
        SystemTag::Full
    }

    fn transfer(&self, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>> {
        let x = full_state_response(self.thermal, s, sample)?;
        Ok(self.solver.static_complex(&x))
    }
}

/// Reduced counterpart `C̃ K̃⁻¹ K̃_th (sẼ − Ã_d)⁻¹ B̃_h`.
pub struct ReducedThermoMech<'a> {
    pub thermal: &'a ReducedModel,
    map: DMatrix<Complex64>,
    outputs: usize,
}

impl<'a> ReducedThermoMech<'a> {
    pub fn new(thermal: &'a ReducedModel, mech: &ReducedMechModel) -> Result<Self> {
        if mech.thermal_dim() != thermal.r() {
            return Err(KmsError::dim(
                "reduced coupling columns",
                thermal.r(),
                mech.thermal_dim(),
            ));
        }
        Ok(Self {
            thermal,
            map: mech.static_map().map(|v| Complex64::new(v, 0.0)),
            outputs: mech.c.nrows(),
        })
    }
}

impl TransferModel for ReducedThermoMech<'_> {
    fn num_inputs(&self) -> usize {
        self.thermal.num_inputs()
    }

    fn num_outputs(&self) -> usize {
        self.outputs
    }

    fn tag(&self) -> SystemTag {
        SystemTag::Reduced
    }

    fn transfer(&self, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>> {
        Ok(&self.map * reduced_state_response(self.thermal, s, sample)?)
    }
}
