//! Browser bindings: the error estimator and a small two-patch rod that can be reduced
//! and compared against its full model interactively.

use kms_core::analysis::{
    collocated_pairs, compare_eigenvalues, frf, log_grid, reduced_eigenvalues, relative_error_frf,
};
use kms_core::error_bound::{estimator, select_cutoff};
use kms_core::model::{
    assemble_rod_1d, BoundaryPatch, MaterialConfig, ParameterSample, RodGeometry, ThermalSystem, ROD_LEFT,
};
use kms_core::pipeline::{reduce, ReductionConfig};
use kms_core::reduction::{zero_threshold, ReducedModel};
use kms_core::KmsError;
use wasm_bindgen::prelude::*;

fn js(e: KmsError) -> JsError {
    JsError::new(&e.to_string())
}

/// Cutoff `ω_m` for an error budget.
#[wasm_bindgen]
pub fn cutoff(epsilon: f64, omega_max: f64, s_e: f64) -> Result<f64, JsError> {
    select_cutoff(epsilon, omega_max, s_e).map_err(js)
}

/// Log grid followed by the estimator on it: `[ω_0..ω_n, e_0..e_n]`.
#[wasm_bindgen]
pub fn estimator_curve(s_e: f64, omega_m: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let grid = log_grid(lo, hi, points).map_err(js)?;
    let est: Vec<f64> = grid.iter().map(|&w| estimator(w, s_e, omega_m)).collect();
    Ok([grid, est].concat())
}

/// Unit-section steel rod, heat flux at the left end, convective lateral patches on
/// the left and right thirds.
#[wasm_bindgen]
pub struct RodDemo {
    full: ThermalSystem,
    reduced: ReducedModel,
    s_e: f64,
    omega_m: f64,
    mu: usize,
}

#[wasm_bindgen]
impl RodDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(num_elements: usize, epsilon: f64, n_me: usize) -> Result<RodDemo, JsError> {
        let g = RodGeometry::new(num_elements, 1.0);
        let m = g.mesh();
        let patches = [
            BoundaryPatch::heat_flux("q", vec![ROD_LEFT]),
            BoundaryPatch::convective("left", m.lateral_between(0.0, 1.0 / 3.0)),
            BoundaryPatch::convective("right", m.lateral_between(2.0 / 3.0, 1.0)),
        ];
        let full = assemble_rod_1d(&g, &MaterialConfig::steel(), &patches).map_err(js)?;
        let cfg = ReductionConfig {
            epsilon,
            n_me,
            ..ReductionConfig::default()
        };
        let out = reduce(&full, None, &cfg).map_err(js)?;
        Ok(RodDemo {
            full,
            s_e: cfg.s_e,
            omega_m: out.stats.omega_m,
            mu: out.stats.mu,
            reduced: out.thermal,
        })
    }

    pub fn n(&self) -> usize {
        self.full.n()
    }

    pub fn r(&self) -> usize {
        self.reduced.r()
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    /// `[ω_0..ω_n, err_0..err_n, est_0..est_n]` for the heat-flux input read at the
    /// heated end; undefined errors come back as NaN.
    pub fn error_curve(&self, h_left: f64, h_right: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
        let s = ParameterSample::new(vec![h_left, h_right]).map_err(js)?;
        let grid = log_grid(lo, hi, points).map_err(js)?;
        let f = frf(&self.full, &grid, &s).map_err(js)?;
        let r = frf(&self.reduced, &grid, &s).map_err(js)?;
        let curve = relative_error_frf(&f, &r, &collocated_pairs(1)).map_err(js)?.remove(0);
        let err: Vec<f64> = curve.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let est: Vec<f64> = grid.iter().map(|&w| estimator(w, self.s_e, self.omega_m)).collect();
        Ok([grid, err, est].concat())
    }

    /// Decay rates `|α|` of the `k` slowest nonzero modes: `[full_0..full_k, reduced_0..reduced_k]`.
    pub fn spectrum(&self, h_left: f64, h_right: f64, k: usize) -> Result<Vec<f64>, JsError> {
        let s = ParameterSample::new(vec![h_left, h_right]).map_err(js)?;
        let sigma = zero_threshold(&self.full, &s).map_err(js)?;
        let nonzero = reduced_eigenvalues(&self.reduced, &s)
            .map_err(js)?
            .iter()
            .filter(|a| a.abs() >= sigma)
            .count();
        let rows = compare_eigenvalues(&self.full, &self.reduced, &s, k.min(nonzero)).map_err(js)?;
        let full = rows.iter().map(|e| e.full.abs());
        let red = rows.iter().map(|e| e.reduced.abs());
        Ok(full.chain(red).collect())
    }
}
