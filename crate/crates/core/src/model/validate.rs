use super::{InputKind, MechanicalSystem, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::skyline::LdltFactor;
use crate::sparse::CsrMatrix;

const SYMMETRY_TOL: f64 = 1e-12;

fn check_square(name: &str, m: &CsrMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(KmsError::invariant(
            name,
            "shape",
            format!("expected {n}x{n}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_symmetric(name: &str, m: &CsrMatrix) -> Result<()> {
    let asym = m.asymmetry();
    let scale = m.max_abs();
    if asym > SYMMETRY_TOL * scale {
        return Err(KmsError::invariant(
            name,
            "symmetry",
            format!("max |M - Mᵀ| = {asym:e}, max |M| = {scale:e}"),
        ));
    }
    Ok(())
}

/// Positive definiteness via the pivots of an unpivoted `L D Lᵀ`.
fn check_positive_definite(name: &str, terms: &[(f64, &CsrMatrix)], check: &str) -> Result<()> {
    match LdltFactor::factor_combination(terms, name) {
        Ok(f) => {
            if let Some((i, d)) = f.pivots().iter().enumerate().find(|(_, d)| **d <= 0.0) {
                return Err(KmsError::invariant(name, check, format!("pivot {i} is {d:e}")));
            }
            Ok(())
        }
        Err(KmsError::Singular { pivot, value, .. }) => Err(KmsError::invariant(
            name,
            check,
            format!("pivot at dof {pivot} is {value:e}"),
        )),
        Err(e) => Err(e),
    }
}

pub fn validate_thermal(sys: &ThermalSystem) -> Result<()> {
    let n = sys.e.nrows();
    check_square("E", &sys.e, n)?;
    check_square("A", &sys.a, n)?;
    check_symmetric("E", &sys.e)?;
    check_symmetric("A", &sys.a)?;
    if let Some((i, v)) = sys.e.diagonal().iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(KmsError::invariant(
            "E",
            "positive definiteness",
            format!("diagonal entry {i} is {v:e}"),
        ));
    }
    check_positive_definite("E", &[(1.0, &sys.e)], "positive definiteness")?;
    // -A + τE must be positive definite for a tiny τ if A is negative semi-definite
    let e_scale = sys.e.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
    let tau = 1e-10 * sys.a.norm_inf().max(f64::MIN_POSITIVE) / e_scale;
    check_positive_definite("A", &[(-1.0, &sys.a), (tau, &sys.e)], "negative semi-definiteness")?;

    let mut owner = vec![usize::MAX; n];
    for (i, d) in sys.d.iter().enumerate() {
        let name = sys.patch_names.get(i).cloned().unwrap_or_else(|| format!("D[{i}]"));
        let label = format!("D[{name}]");
        check_square(&label, d, n)?;
        if !d.is_diagonal() {
            return Err(KmsError::invariant(&label, "diagonality", "off-diagonal entries"));
        }
        for (k, v) in d.diagonal().into_iter().enumerate() {
            if v > 0.0 {
                return Err(KmsError::invariant(
                    &label,
                    "nonpositivity",
                    format!("entry {k} is {v:e}"),
                ));
            }
            if v < 0.0 {
                if owner[k] != usize::MAX {
                    return Err(KmsError::invariant(
                        &label,
                        "disjoint support",
                        format!("dof {k} also belongs to patch {}", owner[k]),
                    ));
                }
                owner[k] = i;
            }
        }
    }
    if sys.patch_names.len() != sys.d.len() {
        return Err(KmsError::dim("patch names", sys.d.len(), sys.patch_names.len()));
    }
    if sys.b.nrows() != n {
        return Err(KmsError::invariant(
            "B",
            "shape",
            format!("{} rows, expected {n}", sys.b.nrows()),
        ));
    }
    if sys.c.ncols() != n {
        return Err(KmsError::invariant(
            "C",
            "shape",
            format!("{} columns, expected {n}", sys.c.ncols()),
        ));
    }
    if !sys.inputs.is_empty() && sys.inputs.len() != sys.b.ncols() {
        return Err(KmsError::dim("input channels", sys.b.ncols(), sys.inputs.len()));
    }
    for ch in &sys.inputs {
        if let InputKind::Ambient { patch } = ch.kind {
            if patch >= sys.d.len() {
                return Err(KmsError::InvalidInput(format!(
                    "input '{}' refers to missing patch {patch}",
                    ch.name
                )));
            }
        }
    }
    Ok(())
}

pub fn validate_mechanical(mech: &MechanicalSystem, thermal_n: usize) -> Result<()> {
    let n = mech.k.nrows();
    check_square("K", &mech.k, n)?;
    check_symmetric("K", &mech.k)?;
    check_positive_definite("K", &[(1.0, &mech.k)], "positive definiteness")?;
    if mech.k_th.nrows() != n || mech.k_th.ncols() != thermal_n {
        return Err(KmsError::invariant(
            "K_th",
            "shape",
            format!(
                "expected {n}x{thermal_n}, got {}x{}",
                mech.k_th.nrows(),
                mech.k_th.ncols()
            ),
        ));
    }
    if mech.x_ref.len() != thermal_n {
        return Err(KmsError::invariant(
            "x_ref",
            "shape",
            format!("length {}, expected {thermal_n}", mech.x_ref.len()),
        ));
    }
    if mech.b_ext.nrows() != n {
        return Err(KmsError::invariant(
            "B_ext",
            "shape",
            format!("{} rows, expected {n}", mech.b_ext.nrows()),
        ));
    }
    if mech.c.ncols() != n {
        return Err(KmsError::invariant(
            "C_mech",
            "shape",
            format!("{} columns, expected {n}", mech.c.ncols()),
        ));
    }
    Ok(())
}
