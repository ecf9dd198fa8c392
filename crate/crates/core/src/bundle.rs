//! Reduced models on disk: dense Matrix Market arrays, the bases in binary form and a
//! `bundle.toml` index.
//!
//! ```toml
//! [thermal]
//! E = "E.mtx"
//! A = "A.mtx"
//! B = "B.mtx"
//! C = "C.mtx"
//! basis = "basis.bin"
//! patches = [{ name = "top", D = "D0_top.mtx" }]
//! inputs = [{ name = "top_ambient", kind = "ambient", patch = 0 }]
//! outputs = ["y0"]
//!
//! [mechanical]
//! K = "K_mech.mtx"
//! coupling = "coupling.mtx"
//! ref_load = "ref_load.mtx"
//! C = "C_mech.mtx"
//! basis = "mech_basis.bin"
//! outputs = ["ux(8,8,8)"]
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KmsError, Result};
use crate::fsutil::write_atomic;
use crate::mech::ReducedMechModel;
use crate::model::io::PatchEntry;
use crate::model::InputChannel;
use crate::mtx::{read_dense, write_dense};
use crate::reduction::{ModelKind, ReducedModel, ReductionBasis};

pub const BUNDLE_NAME: &str = "bundle.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ThermalPart {
    #[serde(rename = "E")]
    e: String,
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
    #[serde(rename = "C")]
    c: String,
    basis: String,
    #[serde(default)]
    patches: Vec<PatchEntry>,
    inputs: Vec<InputChannel>,
    outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MechPart {
    #[serde(rename = "K")]
    k: String,
    coupling: String,
    ref_load: String,
    #[serde(rename = "B_ext", default, skip_serializing_if = "Option::is_none")]
    b_ext: Option<String>,
    #[serde(rename = "C")]
    c: String,
    basis: String,
    outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Index {
    thermal: ThermalPart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mechanical: Option<MechPart>,
}

fn stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes the reduced thermal model (and the mechanical one, if any) into `dir`;
/// returns the index path.
pub fn save_bundle(dir: &Path, thermal: &ReducedModel, mech: Option<&ReducedMechModel>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| KmsError::io(dir, e))?;
    write_dense(&dir.join("E.mtx"), &thermal.e)?;
    write_dense(&dir.join("A.mtx"), &thermal.a)?;
    write_dense(&dir.join("B.mtx"), &thermal.b)?;
    write_dense(&dir.join("C.mtx"), &thermal.c)?;
    thermal.basis.save(&dir.join("basis.bin"))?;
    let mut patches = Vec::new();
    for (k, (name, d)) in thermal.patch_names.iter().zip(&thermal.d).enumerate() {
        let file = format!("D{k}_{}.mtx", stem(name));
        write_dense(&dir.join(&file), d)?;
        patches.push(PatchEntry {
            name: name.clone(),
            d: file,
        });
    }
    let mechanical = match mech {
        None => None,
        Some(m) => {
            write_dense(&dir.join("K_mech.mtx"), &m.k)?;
            write_dense(&dir.join("coupling.mtx"), &m.coupling)?;
            write_dense(
                &dir.join("ref_load.mtx"),
                &DMatrix::from_column_slice(m.ref_load.len(), 1, m.ref_load.as_slice()),
            )?;
            let b_ext = if m.b_ext.ncols() > 0 {
                write_dense(&dir.join("B_ext_mech.mtx"), &m.b_ext)?;
                Some("B_ext_mech.mtx".to_string())
            } else {
                None
            };
            write_dense(&dir.join("C_mech.mtx"), &m.c)?;
            m.basis.save(&dir.join("mech_basis.bin"))?;
            Some(MechPart {
                k: "K_mech.mtx".into(),
                coupling: "coupling.mtx".into(),
                ref_load: "ref_load.mtx".into(),
                b_ext,
                c: "C_mech.mtx".into(),
                basis: "mech_basis.bin".into(),
                outputs: m.output_names.clone(),
            })
        }
    };
    let index = Index {
        thermal: ThermalPart {
            e: "E.mtx".into(),
            a: "A.mtx".into(),
            b: "B.mtx".into(),
            c: "C.mtx".into(),
            basis: "basis.bin".into(),
            patches,
            inputs: thermal.inputs.clone(),
            outputs: thermal.output_names.clone(),
        },
        mechanical,
    };
    let path = dir.join(BUNDLE_NAME);
    let text = toml::to_string(&index).expect("bundle index is always serializable");
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn square(path: &Path, r: usize) -> Result<DMatrix<f64>> {
    let m = read_dense(path)?;
    if m.nrows() != r || m.ncols() != r {
        return Err(KmsError::dim(&path.display().to_string(), r, m.nrows()));
    }
    Ok(m)
}

/// Reads a bundle index (or the directory holding it).
pub fn load_bundle(path: &Path) -> Result<(ReducedModel, Option<ReducedMechModel>)> {
    let index_path = if path.is_dir() {
        path.join(BUNDLE_NAME)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&index_path).map_err(|e| KmsError::io(&index_path, e))?;
    let index: Index = toml::from_str(&text).map_err(|e| KmsError::Config(format!("{}: {e}", index_path.display())))?;
    let base = index_path.parent().unwrap_or(Path::new("."));
    let t = &index.thermal;
    let basis = ReductionBasis::load(&base.join(&t.basis))?;
    let r = basis.r();
    let e = square(&base.join(&t.e), r)?;
    let a = square(&base.join(&t.a), r)?;
    let d = t
        .patches
        .iter()
        .map(|p| square(&base.join(&p.d), r))
        .collect::<Result<Vec<_>>>()?;
    let b = read_dense(&base.join(&t.b))?;
    let c = read_dense(&base.join(&t.c))?;
    if b.nrows() != r || c.ncols() != r {
        return Err(KmsError::dim("reduced B rows / C columns", r, b.nrows().max(c.ncols())));
    }
    if t.inputs.len() != b.ncols() || t.outputs.len() != c.nrows() {
        return Err(KmsError::Config(format!(
            "{}: {} inputs and {} outputs listed for a {}x{} transfer matrix",
            index_path.display(),
            t.inputs.len(),
            t.outputs.len(),
            c.nrows(),
            b.ncols()
        )));
    }
    let thermal = ReducedModel {
        e,
        a,
        d,
        b,
        c,
        basis,
        kind: ModelKind::Thermal,
        inputs: t.inputs.clone(),
        patch_names: t.patches.iter().map(|p| p.name.clone()).collect(),
        output_names: t.outputs.clone(),
    };
    let mech = match &index.mechanical {
        None => None,
        Some(m) => {
            let basis = ReductionBasis::load(&base.join(&m.basis))?;
            let rm = basis.r();
            let k = square(&base.join(&m.k), rm)?;
            let coupling = read_dense(&base.join(&m.coupling))?;
            if coupling.nrows() != rm || coupling.ncols() != r {
                return Err(KmsError::dim("coupling columns", r, coupling.ncols()));
            }
            let ref_load = read_dense(&base.join(&m.ref_load))?;
            let b_ext = match &m.b_ext {
                Some(f) => read_dense(&base.join(f))?,
                None => DMatrix::zeros(rm, 0),
            };
            let c = read_dense(&base.join(&m.c))?;
            Some(ReducedMechModel::new(
                k,
                coupling,
                DVector::from_column_slice(ref_load.as_slice()),
                b_ext,
                c,
                basis,
                m.outputs.clone(),
            )?)
        }
    };
    Ok((thermal, mech))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::{build_mech_basis, project_mechanical};
    use crate::model::{assemble_box_3d, BoundaryPatch, BoxFace, BoxGeometry, MaterialConfig};
    use crate::reduction::{orth, project};

    #[test]
    fn round_trip_is_exact() {
        let mut g = BoxGeometry::new(3, 2, 2, 0.1, 0.1, 0.1);
        g.mech_outputs = vec![[3, 2, 2]];
        let m = g.mesh();
        let p = [
            BoundaryPatch::convective("top", m.facets_of(BoxFace::ZPlus)),
            BoundaryPatch::heat_flux("q", m.facets_of(BoxFace::YMinus)),
            BoundaryPatch::fixed("clamp", m.facets_of(BoxFace::XMinus)),
        ];
        let (th, me) = assemble_box_3d(&g, &MaterialConfig::steel(), &p).unwrap();
        let v = orth(&DMatrix::from_fn(th.n(), 5, |i, j| {
            ((i + 3 * j) % 7) as f64 + (j == 0) as u8 as f64
        }));
        let mut basis = ReductionBasis::identity(th.n());
        basis.tags.truncate(v.ncols());
        basis.v = v;
        let red = project(&th, &basis).unwrap();
        let vm = build_mech_basis(&me, &basis, 0.0).unwrap();
        let rm = project_mechanical(&me, &vm, &basis).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let idx = save_bundle(dir.path(), &red, Some(&rm)).unwrap();
        let (red2, rm2) = load_bundle(&idx).unwrap();
        assert_eq!(red, red2);
        assert_eq!(Some(rm), rm2);
        let (red3, none) = load_bundle(&save_bundle(&dir.path().join("t"), &red, None).unwrap()).unwrap();
        assert_eq!(red, red3);
        assert!(none.is_none());
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains(BUNDLE_NAME));
    }
}
