//! A-priori error estimate of a KMS reduction and the cutoff that meets a tolerance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{frf, relative_error_frf, ErrorCurve, FrfResult};
use crate::error::{KmsError, Result};
use crate::model::{ParameterSample, ThermalSystem};
use crate::reduction::ReducedModel;

/// `(ω² + s_e²) / (ω² + ω_m²)`.
pub fn estimator(omega: f64, s_e: f64, omega_m: f64) -> f64 {
    let w2 = omega * omega;
    (w2 + s_e * s_e) / (w2 + omega_m * omega_m)
}

/// Smallest `ω_m` for which the estimate at `omega_max` equals `epsilon`.
///
/// `epsilon ≥ 1` needs no modes at all; `omega_max` is returned with a warning.
pub fn select_cutoff(epsilon: f64, omega_max: f64, s_e: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(KmsError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(omega_max > 0.0) || !(s_e >= 0.0) || !omega_max.is_finite() {
        return Err(KmsError::InvalidInput(format!(
            "need omega_max > 0 and s_e >= 0, got {omega_max} and {s_e}"
        )));
    }
    if epsilon >= 1.0 {
        log::warn!("epsilon = {epsilon} >= 1 needs no modal part; using omega_m = omega_max");
        return Ok(omega_max);
    }
    let w2 = omega_max * omega_max;
    Ok(((w2 + s_e * s_e) / epsilon - w2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub omega_max: f64,
    pub s_e: f64,
    pub omega_m: f64,
}

impl ErrorBudget {
    pub fn new(epsilon: f64, omega_max: f64, s_e: f64) -> Result<Self> {
        if !(s_e > 0.0 && s_e < omega_max) {
            return Err(KmsError::InvalidInput(format!(
                "need 0 < s_e < omega_max, got s_e = {s_e}, omega_max = {omega_max}"
            )));
        }
        let omega_m = select_cutoff(epsilon, omega_max, s_e)?;
        Ok(Self {
            epsilon,
            omega_max,
            s_e,
            omega_m,
        })
    }

    pub fn estimate(&self, omega: f64) -> f64 {
        estimator(omega, self.s_e, self.omega_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub omega: f64,
    pub error: Option<f64>,
    pub estimate: f64,
    /// `estimate − error`; negative values are exceedances.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub pair: (usize, usize),
    pub collocated: bool,
    pub rows: Vec<BoundRow>,
}

impl PairBound {
    pub fn exceedances(&self) -> usize {
        self.rows.iter().filter(|r| r.margin.is_some_and(|m| m < 0.0)).count()
    }

    pub fn worst_margin(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.margin).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s_e: f64,
    pub omega_m: f64,
    pub sample: ParameterSample,
    pub pairs: Vec<PairBound>,
}

impl BoundReport {
    pub fn exceedances(&self) -> usize {
        self.pairs.iter().map(PairBound::exceedances).sum()
    }

    /// Exceedances on collocated pairs only, the pairs the estimate is proven for.
    pub fn collocated_exceedances(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.collocated)
            .map(PairBound::exceedances)
            .sum()
    }

    /// `pair, omega, error, estimate, margin` in long format, 1-based pair labels.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair,omega,error,estimate,margin\n");
        for p in &self.pairs {
            for r in &p.rows {
                let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{}:{},{:e},{},{:e},{}",
                    p.pair.0 + 1,
                    p.pair.1 + 1,
                    r.omega,
                    opt(r.error),
                    r.estimate,
                    opt(r.margin)
                );
            }
        }
        s
    }
}

/// Compares precomputed error curves with the estimate.
pub fn bound_check_curves(
    omegas: &[f64],
    curves: &[ErrorCurve],
    s_e: f64,
    omega_m: f64,
    sample: &ParameterSample,
    collocated: impl Fn((usize, usize)) -> bool,
) -> BoundReport {
    let pairs = curves
        .iter()
        .map(|c| {
            let colloc = collocated(c.pair);
            if !colloc {
                log::warn!(
                    "pair {}:{} is not collocated; the estimate is not guaranteed there",
                    c.pair.0 + 1,
                    c.pair.1 + 1
                );
            }
            PairBound {
                pair: c.pair,
                collocated: colloc,
                rows: omegas
                    .iter()
                    .zip(&c.values)
                    .map(|(&omega, &error)| {
                        let estimate = estimator(omega, s_e, omega_m);
                        BoundRow {
                            omega,
                            error,
                            estimate,
                            margin: error.map(|e| estimate - e),
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    BoundReport {
        s_e,
        omega_m,
        sample: sample.clone(),
        pairs,
    }
}

/// True when column `j` of `B` equals row `i` of `C` (to rounding).
pub fn is_collocated(full: &ThermalSystem, (i, j): (usize, usize)) -> bool {
    i < full.c.nrows() && j < full.b.ncols() && {
        let b = full.b.column(j);
        let c = full.c.row(i);
        let scale = b.amax().max(c.amax());
        scale > 0.0 && b.iter().zip(c.iter()).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
    }
}

/// Measures `|e_ij(jω)|` of `reduced` against `full` and flags every point above the estimate.
pub fn bound_check(
    full: &ThermalSystem,
    reduced: &ReducedModel,
    grid: &[f64],
    io_pairs: &[(usize, usize)],
    sample: &ParameterSample,
) -> Result<BoundReport> {
    let f = frf(full, grid, sample)?;
    let r = frf(reduced, grid, sample)?;
    bound_check_frf(full, reduced, &f, &r, io_pairs)
}

pub fn bound_check_frf(
    full: &ThermalSystem,
    reduced: &ReducedModel,
    f: &FrfResult,
    r: &FrfResult,
    io_pairs: &[(usize, usize)],
) -> Result<BoundReport> {
    let curves = relative_error_frf(f, r, io_pairs)?;
    Ok(bound_check_curves(
        &f.omegas,
        &curves,
        reduced.basis.s_e,
        reduced.basis.omega_m,
        &f.sample,
        |p| is_collocated(full, p),
    ))
}
