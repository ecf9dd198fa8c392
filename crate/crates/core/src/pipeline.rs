//! Error budget → modal basis → Krylov block → KMS → bilinear extension → projection,
//! plus the mechanical basis when a mechanical system is present.

use serde::{Deserialize, Serialize};

use crate::error::{KmsError, Result};
use crate::error_bound::ErrorBudget;
use crate::mech::{build_mech_basis, project_mechanical, ReducedMechModel};
use crate::model::{MechanicalSystem, ParameterSample, ThermalSystem};
use crate::param::bilinear_extend;
use crate::reduction::{
    build_krylov_block, combine_kms, compute_modal_basis, project, ModalBasis, ModalOptions, ReducedModel,
    ReductionBasis,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    pub epsilon: f64,
    pub omega_max: f64,
    pub s_e: f64,
    pub n_me: usize,
    pub moments: usize,
    /// Mechanical expansion point; recorded, immaterial for the quasi-static model.
    pub s_e_mech: f64,
    /// HTC sample of the pencil used for the modal part (all zero by default).
    pub modal_htc: Option<Vec<f64>>,
    pub max_modes: usize,
    pub seed: u64,
    /// Testing aid: drops this fraction of the modal columns, slowest modes (smallest `|α|`) first.
    pub drop_modal_fraction: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            omega_max: 0.01,
            s_e: 1e-8,
            n_me: 2,
            moments: 1,
            s_e_mech: 30.0,
            modal_htc: None,
            max_modes: ModalOptions::default().max_modes,
            seed: ModalOptions::default().seed,
            drop_modal_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStats {
    pub n: usize,
    pub n_c: usize,
    pub mu: usize,
    pub omega_m: f64,
    pub kms_pre_deflation: usize,
    pub kms_width: usize,
    pub parametric_pre_deflation: usize,
    pub parametric_width: usize,
    pub mech_n: Option<usize>,
    pub mech_pre_deflation: Option<usize>,
    pub mech_width: Option<usize>,
    pub modal_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub budget: ErrorBudget,
    pub modal: ModalBasis,
    pub kms: ReductionBasis,
    pub parametric: ReductionBasis,
    pub thermal: ReducedModel,
    pub mechanical: Option<ReducedMechModel>,
    pub stats: ReductionStats,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| {
        log::error!("stage '{name}' failed: {e}");
        e
    })
}

/// Plain KMS basis at `omega_m` (no bilinear stages).
pub fn kms_basis(system: &ThermalSystem, cfg: &ReductionConfig, omega_m: f64) -> Result<(ModalBasis, ReductionBasis)> {
    let modal_sample = match &cfg.modal_htc {
        Some(h) => ParameterSample::new(h.clone())?,
        None => ParameterSample::zeros(system.num_patches()),
    };
    let opts = ModalOptions {
        max_modes: cfg.max_modes,
        seed: cfg.seed,
        ..ModalOptions::default()
    };
    let mut modal = stage(
        "modal basis",
        compute_modal_basis(system, omega_m, &modal_sample, &opts),
    )?;
    if cfg.drop_modal_fraction > 0.0 {
        let keep = ((1.0 - cfg.drop_modal_fraction.min(1.0)) * modal.len() as f64).round() as usize;
        log::warn!("dropping {} of {} modal columns", modal.len() - keep, modal.len());
        let skip = modal.len() - keep;
        modal.vectors = modal.vectors.columns(skip, keep).into_owned();
        modal.eigenvalues.drain(..skip);
        modal.residuals.drain(..skip);
    }
    let krylov = stage(
        "Krylov block",
        build_krylov_block(system, cfg.s_e, &system.b, cfg.moments, None),
    )?;
    let kms = stage(
        "KMS combination",
        combine_kms(&modal.vectors, &krylov, cfg.s_e, omega_m),
    )?;
    Ok((modal, kms))
}

pub fn reduce(
    thermal: &ThermalSystem,
    mech: Option<&MechanicalSystem>,
    cfg: &ReductionConfig,
) -> Result<ReductionOutput> {
    if cfg.moments == 0 {
        return Err(KmsError::InvalidInput("moments must be at least 1".into()));
    }
    let budget = stage("error budget", ErrorBudget::new(cfg.epsilon, cfg.omega_max, cfg.s_e))?;
    let (modal, kms) = kms_basis(thermal, cfg, budget.omega_m)?;
    let parametric = stage("bilinear extension", bilinear_extend(thermal, &kms, cfg.n_me))?;
    let reduced = stage("thermal projection", project(thermal, &parametric))?;
    let mechanical = match mech {
        None => None,
        Some(m) => {
            let vm = stage("mechanical basis", build_mech_basis(m, &parametric, cfg.s_e_mech))?;
            Some(stage("mechanical projection", project_mechanical(m, &vm, &parametric))?)
        }
    };
    let stats = ReductionStats {
        n: thermal.n(),
        n_c: thermal.num_patches(),
        mu: kms.mu,
        omega_m: budget.omega_m,
        kms_pre_deflation: kms.pre_deflation_width,
        kms_width: kms.r(),
        parametric_pre_deflation: parametric.pre_deflation_width,
        parametric_width: parametric.r(),
        mech_n: mech.map(|m| m.n()),
        mech_pre_deflation: mechanical.as_ref().map(|m| m.basis.pre_deflation_width),
        mech_width: mechanical.as_ref().map(|m| m.r()),
        modal_eigenvalues: modal.eigenvalues.clone(),
    };
    log::info!(
        "omega_m = {:.6e} rad/s, mu = {}, KMS r = {}, parametric r = {} ({} before deflation)",
        budget.omega_m,
        kms.mu,
        kms.r(),
        parametric.r(),
        parametric.pre_deflation_width
    );
    Ok(ReductionOutput {
        budget,
        modal,
        kms,
        parametric,
        thermal: reduced,
        mechanical,
        stats,
    })
}
