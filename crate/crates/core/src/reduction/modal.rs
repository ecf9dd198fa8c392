//! Smallest-magnitude eigenpairs of `A_d φ = α E φ` by shift-invert block Lanczos.
//!
//! The operator is `(σE − A_d)⁻¹E` with `σ` a tiny positive shift that keeps the
//! conduction nullspace factorizable. Krylov vectors are kept E-orthonormal with full
//! reorthogonalization, Ritz pairs come from the original pencil projected on that
//! space, and the number of eigenvalues below the cutoff is certified beforehand by
//! a Sturm count (inertia of `−A_d − ω E`).

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::krylov::ShiftedSolver;
use super::ortho::{Orthonormalizer, DROP_TOL};
use crate::error::{KmsError, Result};
use crate::linalg::sym_eigen_sorted;
use crate::model::{ParameterSample, ThermalSystem};
use crate::skyline::LdltFactor;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalOptions {
    /// Refuse cutoffs capturing more modes than this.
    pub max_modes: usize,
    pub block_size: usize,
    /// Relative residual `‖A_dφ − αEφ‖ ≤ tol ‖A_dφ‖`.
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for ModalOptions {
    fn default() -> Self {
        Self {
            max_modes: 500,
            block_size: 8,
            residual_tol: 1e-8,
            seed: 0x6b6d73,
        }
    }
}

/// E-orthonormal eigenvectors and eigenvalues `α_k ≤ 0`, sorted by `|α|` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    pub vectors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ModalBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

struct Pencil<'a> {
    /// `−A_d`, positive semi-definite.
    k: CsrMatrix,
    e: &'a CsrMatrix,
    /// `|−A_d|` entrywise, for the rounding floor of residuals.
    k_abs: CsrMatrix,
    sigma: f64,
}

impl<'a> Pencil<'a> {
    fn new(system: &'a ThermalSystem, sample: &ParameterSample) -> Result<Self> {
        let k = system.system_matrix(sample)?.scaled(-1.0);
        let e_min = system.e.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let scale = k.norm_inf() / e_min.max(f64::MIN_POSITIVE);
        let k_abs = CsrMatrix::from_triplets(k.nrows(), k.ncols(), k.triplets().map(|(i, j, v)| (i, j, v.abs())));
        Ok(Self {
            k_abs,
            k,
            e: &system.e,
            sigma: 1e-12 * scale.max(f64::MIN_POSITIVE),
        })
    }

    /// Number of eigenvalues `ω = −α` strictly below `omega`.
    fn count_below(&self, omega: f64) -> Result<usize> {
        LdltFactor::negative_inertia(&[(1.0, &self.k), (-omega, self.e)])
    }
}

struct Lanczos<'a> {
    pencil: &'a Pencil<'a>,
    solver: ShiftedSolver,
    q: Orthonormalizer<'a>,
    kq: Vec<DVector<f64>>,
    pending: DMatrix<f64>,
    pending_random: bool,
    rng: ChaCha8Rng,
    block: usize,
    tol: f64,
}

struct Ritz {
    theta: Vec<f64>,
    vectors: DMatrix<f64>,
    residuals: Vec<f64>,
}

impl<'a> Lanczos<'a> {
    fn new(
        system: &'a ThermalSystem,
        pencil: &'a Pencil<'a>,
        sample: &ParameterSample,
        opts: &ModalOptions,
    ) -> Result<Self> {
        // σE − A_d with the sample folded in
        let solver = ShiftedSolver::new(system, pencil.sigma, Some(sample))?;
        let n = system.n();
        let block = opts.block_size.clamp(1, n);
        let mut me = Self {
            pencil,
            solver,
            q: Orthonormalizer::with_metric(pencil.e, DROP_TOL),
            kq: Vec::new(),
            pending: DMatrix::zeros(n, 0),
            pending_random: true,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            block,
            tol: opts.residual_tol,
        };
        me.pending = me.random_block();
        Ok(me)
    }

    fn n(&self) -> usize {
        self.pencil.e.nrows()
    }

    fn random_block(&mut self) -> DMatrix<f64> {
        let n = self.n();
        let cols = self.block.min(n - self.q.len()).max(1);
        let mut m = DMatrix::zeros(n, cols);
        for x in m.iter_mut() {
            *x = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        }
        m
    }

    fn full(&self) -> bool {
        self.q.len() >= self.n()
    }

    /// One application of the operator to the pending block, then growth of the basis.
    fn expand(&mut self) {
        let n = self.n();
        let mut input = std::mem::replace(&mut self.pending, DMatrix::zeros(n, 0));
        if self.pending_random {
            // keep locked directions (the nullspace above all) out of a fresh start block
            for mut col in input.column_iter_mut() {
                let mut v = col.clone_owned();
                self.q.project_out(&mut v);
                col.copy_from(&v);
            }
        }
        let x = self.solver.solve_block(&self.pencil.e.mul_dense(&input));
        let start = self.q.len();
        self.q.extend(&x);
        let fresh: Vec<DVector<f64>> = self.q.columns()[start..].to_vec();
        for c in &fresh {
            self.kq.push(DVector::from_vec(self.pencil.k.mul_vec(c.as_slice())));
        }
        self.pending_random = fresh.is_empty();
        self.pending = if fresh.is_empty() {
            if self.full() {
                DMatrix::zeros(n, 0)
            } else {
                self.random_block()
            }
        } else {
            DMatrix::from_columns(&fresh)
        };
    }

    fn ritz(&self, want: usize) -> Ritz {
        let n = self.n();
        let m = self.q.len();
        let q = self.q.matrix(n);
        let kq = DMatrix::from_columns(&self.kq);
        let h = q.transpose() * &kq;
        let (theta, y) = sym_eigen_sorted(&h);
        let w = want.min(m);
        let y = y.columns(0, w).into_owned();
        let phi = &q * &y;
        let kphi = &kq * &y;
        let ephi = self.pencil.e.mul_dense(&phi);
        let mut residuals = Vec::with_capacity(w);
        for j in 0..w {
            let r = kphi.column(j) - ephi.column(j) * theta[j];
            residuals.push(r.norm());
        }
        Ritz {
            theta: theta[..w].to_vec(),
            vectors: phi,
            residuals,
        }
    }

    fn converged(&self, r: &Ritz, j: usize) -> bool {
        let kphi_norm = r.theta[j].abs()
            * self
                .pencil
                .e
                .mul_vec(r.vectors.column(j).as_slice())
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
        let phi_abs: Vec<f64> = r.vectors.column(j).iter().map(|v| v.abs()).collect();
        let floor = 1e3
            * f64::EPSILON
            * self
                .pencil
                .k_abs
                .mul_vec(&phi_abs)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
        r.residuals[j] <= (self.tol * kphi_norm).max(floor)
    }

    /// Expands until the first `want` Ritz pairs pass the residual test.
    fn run(&mut self, want: usize) -> Result<Ritz> {
        loop {
            if self.q.len() >= want || self.full() {
                let r = self.ritz(want);
                if r.theta.len() >= want && (0..want).all(|j| self.converged(&r, j)) {
                    return Ok(r);
                }
                if self.full() {
                    if r.theta.len() >= want {
                        // the space is the whole state space: Ritz pairs are exact up to rounding
                        return Ok(r);
                    }
                    return Err(KmsError::NoConvergence(format!(
                        "requested {want} eigenpairs of a {}-dimensional system",
                        self.n()
                    )));
                }
            }
            self.expand();
        }
    }
}

fn finish(r: Ritz, count: usize) -> ModalBasis {
    ModalBasis {
        vectors: r.vectors.columns(0, count).into_owned(),
        eigenvalues: r.theta[..count].iter().map(|t| -t.max(0.0)).collect(),
        residuals: r.residuals[..count].to_vec(),
    }
}

/// Eigenvalues with `|α|` below this are treated as zero (the solver shift `σ`).
pub fn zero_threshold(system: &ThermalSystem, sample: &ParameterSample) -> Result<f64> {
    Ok(Pencil::new(system, sample)?.sigma)
}

/// Number of eigenvalues with `|α| < omega` (Sturm count), together with the
/// zero threshold `σ` used by the eigensolver for this pencil.
pub fn count_eigenvalues_below(system: &ThermalSystem, sample: &ParameterSample, omega: f64) -> Result<(usize, f64)> {
    let pencil = Pencil::new(system, sample)?;
    Ok((pencil.count_below(omega)?, pencil.sigma))
}

/// All eigenpairs with `|α| ≤ omega_m` of the pencil at `sample`.
pub fn compute_modal_basis(
    system: &ThermalSystem,
    omega_m: f64,
    sample: &ParameterSample,
    opts: &ModalOptions,
) -> Result<ModalBasis> {
    if !(omega_m > 0.0) || !omega_m.is_finite() {
        return Err(KmsError::InvalidInput(format!(
            "modal cutoff must be positive, got {omega_m}"
        )));
    }
    let n = system.n();
    let pencil = Pencil::new(system, sample)?;
    // inclusive cutoff
    let count = pencil.count_below(omega_m * (1.0 + 1e-12))?;
    if count > opts.max_modes {
        return Err(KmsError::TooManyModes {
            omega_m,
            count,
            limit: opts.max_modes,
        });
    }
    if count == 0 {
        return Ok(ModalBasis {
            vectors: DMatrix::zeros(n, 0),
            eigenvalues: Vec::new(),
            residuals: Vec::new(),
        });
    }
    let mut lz = Lanczos::new(system, &pencil, sample, opts)?;
    loop {
        let r = lz.run(count)?;
        // a Ritz value above the cutoff means an eigenvector was missed so far
        if r.theta[count - 1] <= omega_m * (1.0 + 1e-6) || lz.full() {
            log::debug!(
                "{count} modes below {omega_m:e} rad/s from a {}-dimensional Krylov space",
                lz.q.len()
            );
            return Ok(finish(r, count));
        }
        lz.expand();
    }
}

/// The `k` smallest-magnitude eigenpairs of the pencil at `sample`, confirmed by a Sturm count.
pub fn smallest_eigenpairs(
    system: &ThermalSystem,
    sample: &ParameterSample,
    k: usize,
    opts: &ModalOptions,
) -> Result<ModalBasis> {
    let n = system.n();
    if k > n {
        return Err(KmsError::InvalidInput(format!(
            "{k} eigenpairs requested from a {n}-dimensional system"
        )));
    }
    if k == 0 {
        return Ok(ModalBasis {
            vectors: DMatrix::zeros(n, 0),
            eigenvalues: Vec::new(),
            residuals: Vec::new(),
        });
    }
    let pencil = Pencil::new(system, sample)?;
    let mut lz = Lanczos::new(system, &pencil, sample, opts)?;
    let mut want = k;
    loop {
        let r = lz.run(want)?;
        let top = r.theta[k - 1];
        let probe = (top * (1.0 + 1e-8)).max(pencil.sigma);
        let below = pencil.count_below(probe)?;
        if below <= want || lz.full() {
            return Ok(finish(r, k));
        }
        // Ritz values skipped an eigenvalue, or a multiple one straddles k
        want = below.min(n);
        lz.expand();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pencil_eigen;
    use crate::model::{assemble_rod_1d, BoundaryPatch, MaterialConfig, RodGeometry, ROD_LEFT, ROD_RIGHT};

    fn rod(n: usize, grounded: bool) -> ThermalSystem {
        let patches = [
            BoundaryPatch::convective("left", vec![ROD_LEFT]),
            BoundaryPatch::convective("right", vec![ROD_RIGHT]),
        ];
        let mut sys = assemble_rod_1d(&RodGeometry::new(n, 1.0), &MaterialConfig::steel(), &patches).unwrap();
        if grounded {
            // Dirichlet-like ends folded into A
            sys.a = sys.system_matrix(&ParameterSample(vec![1e12, 1e12])).unwrap();
            sys.d.iter_mut().for_each(|d| *d = CsrMatrix::zeros(n + 1, n + 1));
        }
        sys
    }

    #[test]
    fn insulated_rod_has_a_constant_mode() {
        let sys = rod(20, false);
        let m = compute_modal_basis(&sys, 1e-6, &ParameterSample::zeros(2), &ModalOptions::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.eigenvalues[0].abs() < 1e-14);
        let v = m.vectors.column(0);
        let spread = v.max() - v.min();
        assert!(spread < 1e-8 * v.amax());
    }

    #[test]
    fn analytic_spectrum_of_grounded_rod() {
        let sys = rod(64, true);
        let mat = MaterialConfig::steel();
        let m = smallest_eigenpairs(&sys, &ParameterSample::zeros(2), 5, &ModalOptions::default()).unwrap();
        for k in 0..5 {
            let exact = -mat.diffusivity() * ((k + 1) as f64 * std::f64::consts::PI).powi(2);
            assert!(((m.eigenvalues[k] - exact) / exact).abs() < 0.02, "mode {k}");
        }
    }

    #[test]
    fn cutoff_below_first_mode_is_empty() {
        let sys = rod(16, true);
        let m = compute_modal_basis(&sys, 1e-9, &ParameterSample::zeros(2), &ModalOptions::default()).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn matches_dense_pencil_and_is_e_orthonormal() {
        let sys = rod(40, false);
        let s = ParameterSample(vec![3.0, 700.0]);
        let ad = sys.system_matrix(&s).unwrap().to_dense();
        let (vals, _) = pencil_eigen(&ad, &sys.e.to_dense()).unwrap();
        let mut dense: Vec<f64> = vals;
        dense.reverse();
        let omega_m = -dense[9] * 1.0001;
        let m = compute_modal_basis(&sys, omega_m, &s, &ModalOptions::default()).unwrap();
        assert_eq!(m.len(), 10);
        for k in 0..10 {
            assert!((m.eigenvalues[k] - dense[k]).abs() <= 1e-9 * dense[k].abs() + 1e-15);
        }
        let g = m.vectors.transpose() * sys.e.mul_dense(&m.vectors);
        assert!((g - DMatrix::identity(10, 10)).amax() < 1e-10);
    }

    #[test]
    fn guard_refuses_too_many_modes() {
        let sys = rod(30, false);
        let opts = ModalOptions {
            max_modes: 3,
            ..ModalOptions::default()
        };
        match compute_modal_basis(&sys, 10.0, &ParameterSample::zeros(2), &opts) {
            Err(KmsError::TooManyModes { count, limit, .. }) => {
                assert!(count > 3);
                assert_eq!(limit, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
