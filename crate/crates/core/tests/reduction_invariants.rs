use kms_core::analysis::{collocated_pairs, frf, log_grid, reduced_eigenvalues, relative_error_frf, TransferModel};
use kms_core::error_bound::{bound_check, is_collocated};
use kms_core::linalg::pencil_eigen;
use kms_core::model::{
    assemble_rod_1d, BoundaryPatch, MaterialConfig, ParameterSample, RodGeometry, ThermalSystem, ROD_LEFT, ROD_RIGHT,
};
use kms_core::param::{bilinear_extend, eigen_monotonicity_check, reduced_eigen_error};
use kms_core::pipeline::{kms_basis, reduce, ReductionConfig};
use kms_core::reduction::{orth, project, ShiftedSolver};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

/// 1 m steel rod, convective on two lateral stretches, heated at the left end.
fn rod() -> ThermalSystem {
    let g = RodGeometry::new(100, 1.0);
    let mesh = g.mesh();
    let p = [
        BoundaryPatch::convective("a", mesh.lateral_between(0.0, 0.35)),
        BoundaryPatch::convective("b", mesh.lateral_between(0.6, 1.0)),
        BoundaryPatch::heat_flux("q", vec![ROD_LEFT]),
    ];
    assemble_rod_1d(&g, &MaterialConfig::steel(), &p).unwrap()
}

fn end_cooled_rod() -> ThermalSystem {
    let p = [
        BoundaryPatch::convective("left", vec![ROD_LEFT]),
        BoundaryPatch::convective("right", vec![ROD_RIGHT]),
    ];
    assemble_rod_1d(&RodGeometry::new(40, 0.5), &MaterialConfig::steel(), &p).unwrap()
}

fn residual_outside(v: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (v - w * (w.transpose() * v)).amax()
}

#[test]
fn rod_bound_dominance_on_collocated_pairs() {
    let sys = rod();
    let out = reduce(&sys, None, &ReductionConfig::default()).unwrap();
    let grid = log_grid(1e-5, 1.0, 200).unwrap();
    let pairs = collocated_pairs(sys.num_inputs());
    assert!(pairs.iter().all(|&p| is_collocated(&sys, p)));
    assert!(!is_collocated(&sys, (0, 1)));
    for h in [[1.0, 8.0], [4.0, 8.0], [4.0, 1.0], [50.0, 50.0]] {
        let rep = bound_check(&sys, &out.thermal, &grid, &pairs, &ParameterSample(h.to_vec())).unwrap();
        assert_eq!(rep.exceedances(), 0, "sample {h:?}");
        assert!(rep.pairs[0].rows[0].error.unwrap() < 1e-6);
    }
}

/// Raw chain vectors `((s_eE − A)⁻¹ D_i)^k V` for `k = 1..=n_me`, per patch.
fn raw_chains(sys: &ThermalSystem, v: &DMatrix<f64>, s_e: f64, n_me: usize) -> Vec<DMatrix<f64>> {
    let solver = ShiftedSolver::new(sys, s_e, None).unwrap();
    let mut out = Vec::new();
    for d in &sys.d {
        let mut prev = v.clone();
        for _ in 0..n_me {
            prev = orth(&solver.solve_block(&d.mul_dense(&prev)));
            out.push(prev.clone());
        }
    }
    out
}

#[test]
fn bilinear_spans_are_nested() {
    let sys = rod();
    let cfg = ReductionConfig::default();
    let (_, kms) = kms_basis(&sys, &cfg, 0.0436).unwrap();
    let mut prev_r = kms.r();
    for n_me in 1..=3 {
        let next = bilinear_extend(&sys, &kms, n_me).unwrap();
        assert!(next.r() >= prev_r);
        assert!(residual_outside(&kms.v, &next.v) < 1e-12);
        for block in raw_chains(&sys, &kms.v, cfg.s_e, n_me - 1) {
            assert!(residual_outside(&block, &next.v) < 1e-10, "n_me = {n_me}");
        }
        prev_r = next.r();
    }
}

#[test]
fn frf_error_does_not_grow_with_bilinear_stages() {
    let sys = rod();
    let cfg = ReductionConfig::default();
    let (_, kms) = kms_basis(&sys, &cfg, 0.0436).unwrap();
    let grid = log_grid(1e-5, 1e-1, 40).unwrap();
    let s = ParameterSample(vec![30.0, 5.0]);
    let full = frf(&sys, &grid, &s).unwrap();
    let pairs = collocated_pairs(sys.num_inputs());
    let errors: Vec<f64> = (0..=2)
        .map(|n_me| {
            let red = project(&sys, &bilinear_extend(&sys, &kms, n_me).unwrap()).unwrap();
            let r = frf(&red, &grid, &s).unwrap();
            relative_error_frf(&full, &r, &pairs)
                .unwrap()
                .iter()
                .filter_map(|c| c.max())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[1] <= errors[0] && errors[2] <= errors[1], "{errors:?}");
}

#[test]
fn first_stage_ranges_of_disjoint_patches_intersect_trivially() {
    let sys = rod();
    let cfg = ReductionConfig::default();
    let (_, kms) = kms_basis(&sys, &cfg, 0.0436).unwrap();
    let loads: Vec<DMatrix<f64>> = sys.d.iter().map(|d| d.mul_dense(&kms.v)).collect();
    assert_eq!((loads[0].transpose() * &loads[1]).amax(), 0.0);
    let stage1 = raw_chains(&sys, &kms.v, cfg.s_e, 1);
    let g = stage1[0].transpose() * &stage1[1];
    let cosines = SymmetricEigen::new(&g * g.transpose()).eigenvalues;
    let largest = cosines.iter().copied().fold(0.0, f64::max).sqrt();
    // the near-singular shift pulls both ranges towards the constant field
    assert!(largest < 1.0 - 1e-12, "largest principal cosine {largest}");
}

#[test]
fn reduction_is_deterministic() {
    let sys = rod();
    let a = reduce(&sys, None, &ReductionConfig::default()).unwrap();
    let b = reduce(&sys, None, &ReductionConfig::default()).unwrap();
    assert_eq!(a.parametric.to_bytes(), b.parametric.to_bytes());
    assert_eq!(a.thermal.a, b.thermal.a);
}

#[test]
fn grounded_dc_response_is_real() {
    let sys = end_cooled_rod();
    let s = ParameterSample(vec![20.0, 5.0]);
    let h = sys.transfer(Complex64::new(0.0, 1e-16), &s).unwrap();
    for v in h.iter() {
        assert!(v.im.abs() <= 1e-10 * v.norm());
    }
}

#[test]
fn response_decays_beyond_the_largest_pole() {
    let sys = rod();
    let s = ParameterSample(vec![4.0, 8.0]);
    let (vals, _) = pencil_eigen(&sys.system_matrix(&s).unwrap().to_dense(), &sys.e.to_dense()).unwrap();
    let fastest = vals.iter().copied().fold(0.0, |m: f64, v| m.max(v.abs()));
    let grid = log_grid(2.0 * fastest, 1e3 * fastest, 30).unwrap();
    let f = frf(&sys, &grid, &s).unwrap();
    for k in 1..grid.len() {
        assert!(f.entry(k, (0, 0)).norm() < f.entry(k - 1, (0, 0)).norm());
    }
}

#[test]
fn rod_parametric_eigenvalues_are_accurate() {
    let sys = rod();
    let out = reduce(&sys, None, &ReductionConfig::default()).unwrap();
    for h in [[1.0, 1.0], [1.0, 50.0], [20.0, 7.0], [50.0, 50.0]] {
        let cmp = reduced_eigen_error(&sys, &out.thermal, &ParameterSample(h.to_vec()), 20).unwrap();
        assert_eq!(cmp.len(), 20);
        let worst = cmp.iter().map(|c| c.rel_error).fold(0.0, f64::max);
        assert!(worst < 1e-3, "sample {h:?}: {worst}");
    }
}

#[test]
fn doubling_all_coefficients_lowers_every_eigenvalue() {
    let sys = rod();
    for h in [[0.5, 2.0], [10.0, 1.0], [40.0, 40.0]] {
        let lo = ParameterSample(h.to_vec());
        let hi = ParameterSample(h.iter().map(|v| 2.0 * v).collect());
        assert!(eigen_monotonicity_check(&sys, &lo, &hi, 20).unwrap().holds());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn reduced_rod_stays_stable(h in proptest::collection::vec(0.0f64..1e3, 2)) {
        let out = REDUCED.with(|r| r.clone());
        let ev = reduced_eigenvalues(&out, &ParameterSample(h)).unwrap();
        prop_assert!(ev.iter().all(|v| *v <= 1e-10));
    }
}

thread_local! {
    static REDUCED: kms_core::reduction::ReducedModel = reduce(&rod(), None, &ReductionConfig::default()).unwrap().thermal;
}
