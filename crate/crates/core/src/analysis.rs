//! Frequency responses of full and reduced systems, relative-error curves and
//! eigenvalue comparisons.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KmsError, Result};
use crate::fsutil::write_atomic;
use crate::linalg::pencil_eigen;
use crate::model::{ParameterSample, ThermalSystem};
use crate::reduction::{count_eigenvalues_below, smallest_eigenpairs, zero_threshold, ModalOptions, ReducedModel};
use crate::skyline::LdltFactor;
use crate::sparse::CsrMatrix;

/// `|h|` below this makes a relative error undefined.
pub const UNDEFINED_MAGNITUDE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemTag {
    Full,
    Reduced,
}

/// Anything with a transfer matrix `H(s)` that depends on a parameter sample.
pub trait TransferModel: Sync {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn tag(&self) -> SystemTag;
    fn transfer(&self, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>>;
}

fn realify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

impl TransferModel for ThermalSystem {
    fn num_inputs(&self) -> usize {
        ThermalSystem::num_inputs(self)
    }

    fn num_outputs(&self) -> usize {
        ThermalSystem::num_outputs(self)
    }

    fn tag(&self) -> SystemTag {
        SystemTag::Full
    }

    /// Sparse complex `L D Lᵀ` of `sE − A − Σ h_i D_i`, one solve per input.
    fn transfer(&self, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>> {
        let x = full_state_response(self, s, sample)?;
        Ok(realify(&self.c) * x)
    }
}

/// `(sE − A − Σ h_i D_i)⁻¹ B_h`.
pub fn full_state_response(sys: &ThermalSystem, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>> {
    sys.check_sample(sample)?;
    let mut terms: Vec<(Complex64, &CsrMatrix)> = vec![(s, &sys.e), (Complex64::new(-1.0, 0.0), &sys.a)];
    for (h, d) in sample.values().iter().zip(&sys.d) {
        if *h != 0.0 {
            terms.push((Complex64::new(-h, 0.0), d));
        }
    }
    let f = LdltFactor::factor_complex_combination(&terms, "sE - A")?;
    let b = sys.effective_b(sample);
    let mut x = DMatrix::zeros(sys.n(), b.ncols());
    for j in 0..b.ncols() {
        let rhs: Vec<Complex64> = b.column(j).iter().map(|v| Complex64::new(*v, 0.0)).collect();
        x.column_mut(j).copy_from_slice(&f.solve(&rhs));
    }
    Ok(x)
}

/// `(sẼ − Ã − Σ h_i D̃_i)⁻¹ B̃_h` by dense LU.
pub fn reduced_state_response(
    red: &ReducedModel,
    s: Complex64,
    sample: &ParameterSample,
) -> Result<DMatrix<Complex64>> {
    let ad = red.system_matrix(sample)?;
    let m = realify(&red.e) * s - realify(&ad);
    let b = realify(&red.effective_b(sample));
    m.lu().solve(&b).ok_or_else(|| KmsError::Singular {
        context: format!("reduced sE - A at s = {s}"),
        pivot: 0,
        value: 0.0,
    })
}

impl TransferModel for ReducedModel {
    fn num_inputs(&self) -> usize {
        ReducedModel::num_inputs(self)
    }

    fn num_outputs(&self) -> usize {
        ReducedModel::num_outputs(self)
    }

    fn tag(&self) -> SystemTag {
        SystemTag::Reduced
    }

    fn transfer(&self, s: Complex64, sample: &ParameterSample) -> Result<DMatrix<Complex64>> {
        Ok(realify(&self.c) * reduced_state_response(self, s, sample)?)
    }
}

/// Transfer matrices sampled on a frequency grid. Points where the evaluation failed
/// hold NaN and are listed in `failures`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfResult {
    pub omegas: Vec<f64>,
    pub h: Vec<DMatrix<Complex64>>,
    pub sample: ParameterSample,
    pub tag: SystemTag,
    pub failures: Vec<(usize, String)>,
}

impl FrfResult {
    pub fn entry(&self, k: usize, (i, j): (usize, usize)) -> Complex64 {
        self.h[k][(i, j)]
    }

    /// Single-input response to `u = w·v` for a scalar `v`, e.g. one ambient temperature
    /// driving several ambient channels at once.
    pub fn combine_inputs(&self, w: &[f64]) -> Result<FrfResult> {
        let m = self.h.first().map_or(w.len(), |h| h.ncols());
        if w.len() != m {
            return Err(KmsError::dim("input weights", m, w.len()));
        }
        let wc = DMatrix::from_iterator(m, 1, w.iter().map(|&v| Complex64::new(v, 0.0)));
        Ok(FrfResult {
            h: self.h.iter().map(|h| h * &wc).collect(),
            ..self.clone()
        })
    }
}

pub fn check_grid(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(KmsError::InvalidInput("frequency grid is empty".into()));
    }
    if omegas.iter().any(|w| !w.is_finite()) || omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KmsError::InvalidInput(
            "frequency grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(KmsError::InvalidInput(format!(
            "log grid needs 0 < lo < hi and at least 2 points, got {lo}:{hi}:{n}"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)
            }
        })
        .collect())
}

/// `H(jω)` for every grid point, frequencies evaluated in parallel.
pub fn frf<M: TransferModel + ?Sized>(model: &M, omegas: &[f64], sample: &ParameterSample) -> Result<FrfResult> {
    check_grid(omegas)?;
    let results = crate::par::map(omegas, |w| model.transfer(Complex64::new(0.0, *w), sample));
    let mut h = Vec::with_capacity(omegas.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => h.push(m),
            Err(e @ KmsError::Dimension { .. }) => return Err(e),
            Err(e) => {
                failures.push((k, e.to_string()));
                h.push(DMatrix::from_element(
                    model.num_outputs(),
                    model.num_inputs(),
                    Complex64::new(f64::NAN, f64::NAN),
                ));
            }
        }
    }
    Ok(FrfResult {
        omegas: omegas.to_vec(),
        h,
        sample: sample.clone(),
        tag: model.tag(),
        failures,
    })
}

/// `|e_ij(jω)|` per grid point; `None` where `|h_ij|` is numerically zero or undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub pair: (usize, usize),
    pub values: Vec<Option<f64>>,
}

impl ErrorCurve {
    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }

    pub fn undefined(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Largest error over grid points with `lo ≤ ω ≤ hi`.
    pub fn max_in(&self, omegas: &[f64], lo: f64, hi: f64) -> Option<f64> {
        self.values
            .iter()
            .zip(omegas)
            .filter(|(_, w)| **w >= lo && **w <= hi)
            .filter_map(|(v, _)| *v)
            .reduce(f64::max)
    }
}

pub fn relative_error(h: Complex64, h_red: Complex64) -> Option<f64> {
    if !(h.norm() >= UNDEFINED_MAGNITUDE) || !h_red.norm().is_finite() {
        return None;
    }
    Some(((h - h_red) / h).norm())
}

pub fn relative_error_frf(full: &FrfResult, reduced: &FrfResult, pairs: &[(usize, usize)]) -> Result<Vec<ErrorCurve>> {
    if full.omegas != reduced.omegas {
        return Err(KmsError::InvalidInput("FRFs are sampled on different grids".into()));
    }
    if full.sample != reduced.sample {
        return Err(KmsError::InvalidInput(
            "FRFs belong to different parameter samples".into(),
        ));
    }
    let (p, m) = full.h.first().map(|h| h.shape()).unwrap_or((0, 0));
    let (rp, rm) = reduced.h.first().map(|h| h.shape()).unwrap_or((0, 0));
    if (p, m) != (rp, rm) {
        return Err(KmsError::InvalidInput(format!(
            "transfer matrices differ in shape: {p}x{m} vs {rp}x{rm}"
        )));
    }
    for &(i, j) in pairs {
        if i >= p || j >= m {
            return Err(KmsError::InvalidInput(format!(
                "pair {i}:{j} outside a {p}x{m} transfer matrix"
            )));
        }
    }
    Ok(pairs
        .iter()
        .map(|&pair| ErrorCurve {
            pair,
            values: (0..full.omegas.len())
                .map(|k| relative_error(full.entry(k, pair), reduced.entry(k, pair)))
                .collect(),
        })
        .collect())
}

/// Collocated pairs `(i, i)` of a system with `C = Bᵀ`.
pub fn collocated_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).map(|i| (i, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenComparison {
    pub index: usize,
    pub full: f64,
    pub reduced: f64,
    pub rel_error: f64,
}

/// Eigenvalues `α ≤ 0` of the reduced pencil at `sample`, sorted by `|α|` ascending.
pub fn reduced_eigenvalues(red: &ReducedModel, sample: &ParameterSample) -> Result<Vec<f64>> {
    let (mut vals, _) = pencil_eigen(&red.system_matrix(sample)?, &red.e)?;
    vals.reverse();
    Ok(vals)
}

/// Pairs the first `k` nonzero eigenvalues of the full and reduced pencils by sorted order.
pub fn compare_eigenvalues(
    full: &ThermalSystem,
    reduced: &ReducedModel,
    sample: &ParameterSample,
    k: usize,
) -> Result<Vec<EigenComparison>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let sigma = zero_threshold(full, sample)?;
    let (zeros, _) = count_eigenvalues_below(full, sample, sigma)?;
    let red_vals: Vec<f64> = reduced_eigenvalues(reduced, sample)?
        .into_iter()
        .filter(|a| a.abs() >= sigma)
        .collect();
    if k > red_vals.len() {
        return Err(KmsError::InvalidInput(format!(
            "{k} eigenvalues requested but the reduced model has {} nonzero ones",
            red_vals.len()
        )));
    }
    let want = (k + zeros).min(full.n());
    let modes = smallest_eigenpairs(full, sample, want, &ModalOptions::default())?;
    let full_vals: Vec<f64> = modes.eigenvalues.into_iter().filter(|a| a.abs() >= sigma).collect();
    if full_vals.len() < k {
        return Err(KmsError::InvalidInput(format!(
            "{k} nonzero eigenvalues requested but the full model has {}",
            full_vals.len()
        )));
    }
    Ok((0..k)
        .map(|i| EigenComparison {
            index: i,
            full: full_vals[i],
            reduced: red_vals[i],
            rel_error: ((red_vals[i] - full_vals[i]) / full_vals[i]).abs(),
        })
        .collect())
}

fn fmt_pair((i, j): (usize, usize)) -> String {
    format!("{}_{}", i + 1, j + 1)
}

/// `omega, re_<i>_<j>, im_<i>_<j>, ...` with 1-based pair labels.
pub fn frf_csv(frf: &FrfResult, pairs: &[(usize, usize)]) -> String {
    let mut s = String::from("omega");
    for &p in pairs {
        let _ = write!(s, ",re_{0},im_{0}", fmt_pair(p));
    }
    s.push('\n');
    for (k, w) in frf.omegas.iter().enumerate() {
        let _ = write!(s, "{w:e}");
        for &p in pairs {
            let z = frf.entry(k, p);
            let _ = write!(s, ",{:e},{:e}", z.re, z.im);
        }
        s.push('\n');
    }
    s
}

/// `omega, err_<i>_<j>, ...`; undefined points are left empty.
pub fn error_csv(omegas: &[f64], curves: &[ErrorCurve]) -> String {
    let mut s = String::from("omega");
    for c in curves {
        let _ = write!(s, ",err_{}", fmt_pair(c.pair));
    }
    s.push('\n');
    for (k, w) in omegas.iter().enumerate() {
        let _ = write!(s, "{w:e}");
        for c in curves {
            match c.values[k] {
                Some(v) => {
                    let _ = write!(s, ",{v:e}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

pub fn eigen_csv(rows: &[EigenComparison]) -> String {
    let mut s = String::from("index,alpha_full,alpha_reduced,rel_error\n");
    for r in rows {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", r.index + 1, r.full, r.reduced, r.rel_error);
    }
    s
}

pub fn write_csv(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}
