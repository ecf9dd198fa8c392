//! System files on disk: one Matrix Market file per matrix plus a TOML manifest.
//!
//! ```toml
//! [thermal]
//! E = "E.mtx"
//! A = "A.mtx"
//! B = "B.mtx"
//! C = "C.mtx"
//! patches = [{ name = "top", D = "D_top.mtx" }]
//! inputs = [{ name = "top_ambient", kind = "ambient", patch = 0 }]
//!
//! [mechanical]
//! K = "K.mtx"
//! K_th = "K_th.mtx"
//! B_ext = "B_ext.mtx"
//! C_mech = "C_mech.mtx"
//! x_ref = "x_ref.mtx"
//! ```
//!
//! Paths are relative to the manifest. Missing `patches` gives a system without
//! parameters; missing `inputs` treats every column of `B` as a heat load.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{validate_mechanical, validate_thermal, InputChannel, InputKind, MechanicalSystem, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::fsutil::write_atomic;
use crate::mtx::{read_dense, read_matrix_market, write_dense, write_matrix_market, Symmetry};
use crate::sparse::CsrMatrix;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub name: String,
    #[serde(rename = "D")]
    pub d: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalEntry {
    #[serde(rename = "E")]
    pub e: String,
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(default)]
    pub patches: Vec<PatchEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputChannel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanicalEntry {
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "K_th")]
    pub k_th: String,
    #[serde(rename = "B_ext", default, skip_serializing_if = "Option::is_none")]
    pub b_ext: Option<String>,
    #[serde(rename = "C_mech")]
    pub c_mech: String,
    pub x_ref: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub free_dofs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub thermal: ThermalEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanical: Option<MechanicalEntry>,
}

impl Manifest {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| KmsError::Config(format!("{origin}: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KmsError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }
}

fn file_stem(name: &str) -> String {
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

/// Writes every matrix and `manifest.toml` into `dir`; returns the manifest path.
pub fn save_system(dir: &Path, thermal: &ThermalSystem, mech: Option<&MechanicalSystem>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| KmsError::io(dir, e))?;
    write_matrix_market(&dir.join("E.mtx"), &thermal.e, Symmetry::Symmetric)?;
    write_matrix_market(&dir.join("A.mtx"), &thermal.a, Symmetry::Symmetric)?;
    write_dense(&dir.join("B.mtx"), &thermal.b)?;
    write_dense(&dir.join("C.mtx"), &thermal.c)?;
    let mut patches = Vec::new();
    for (k, (name, d)) in thermal.patch_names.iter().zip(&thermal.d).enumerate() {
        let file = format!("D{k}_{}.mtx", file_stem(name));
        write_matrix_market(&dir.join(&file), d, Symmetry::Symmetric)?;
        patches.push(PatchEntry {
            name: name.clone(),
            d: file,
        });
    }
    let mechanical = match mech {
        None => None,
        Some(m) => {
            write_matrix_market(&dir.join("K.mtx"), &m.k, Symmetry::Symmetric)?;
            write_matrix_market(&dir.join("K_th.mtx"), &m.k_th, Symmetry::General)?;
            let b_ext = if m.b_ext.ncols() > 0 {
                write_dense(&dir.join("B_ext.mtx"), &m.b_ext)?;
                Some("B_ext.mtx".to_string())
            } else {
                None
            };
            write_dense(&dir.join("C_mech.mtx"), &m.c)?;
            write_dense(
                &dir.join("x_ref.mtx"),
                &DMatrix::from_column_slice(m.x_ref.len(), 1, &m.x_ref),
            )?;
            Some(MechanicalEntry {
                k: "K.mtx".into(),
                k_th: "K_th.mtx".into(),
                b_ext,
                c_mech: "C_mech.mtx".into(),
                x_ref: "x_ref.mtx".into(),
                outputs: m.output_names.clone(),
                free_dofs: m.free_dofs.clone(),
            })
        }
    };
    let manifest = Manifest {
        thermal: ThermalEntry {
            e: "E.mtx".into(),
            a: "A.mtx".into(),
            b: "B.mtx".into(),
            c: "C.mtx".into(),
            patches,
            inputs: thermal.inputs.clone(),
            outputs: thermal.output_names.clone(),
        },
        mechanical,
    };
    let path = dir.join(MANIFEST_NAME);
    write_atomic(&path, manifest.to_toml().as_bytes())?;
    Ok(path)
}

/// Reads a manifest and its matrices and validates the result.
pub fn load_system(manifest_path: &Path) -> Result<(ThermalSystem, Option<MechanicalSystem>)> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let thermal = load_thermal(base, &manifest.thermal)?;
    validate_thermal(&thermal)?;
    let mech = match &manifest.mechanical {
        None => None,
        Some(m) => {
            let mech = load_mechanical(base, m)?;
            validate_mechanical(&mech, thermal.n())?;
            Some(mech)
        }
    };
    Ok((thermal, mech))
}

fn load_thermal(base: &Path, t: &ThermalEntry) -> Result<ThermalSystem> {
    let e = read_matrix_market(&base.join(&t.e))?;
    let a = read_matrix_market(&base.join(&t.a))?;
    let b = read_dense(&base.join(&t.b))?;
    let c = read_dense(&base.join(&t.c))?;
    let mut d = Vec::with_capacity(t.patches.len());
    for p in &t.patches {
        d.push(read_matrix_market(&base.join(&p.d))?);
    }
    let inputs = if t.inputs.is_empty() {
        (0..b.ncols())
            .map(|j| InputChannel {
                name: format!("u{j}"),
                kind: InputKind::HeatLoad,
            })
            .collect()
    } else {
        t.inputs.clone()
    };
    let output_names = if t.outputs.is_empty() {
        (0..c.nrows()).map(|i| format!("y{i}")).collect()
    } else {
        t.outputs.clone()
    };
    if output_names.len() != c.nrows() {
        return Err(KmsError::dim("output names", c.nrows(), output_names.len()));
    }
    Ok(ThermalSystem {
        e,
        a,
        d,
        b,
        c,
        patch_names: t.patches.iter().map(|p| p.name.clone()).collect(),
        inputs,
        output_names,
    })
}

fn load_mechanical(base: &Path, m: &MechanicalEntry) -> Result<MechanicalSystem> {
    let k = read_matrix_market(&base.join(&m.k))?;
    let k_th = read_matrix_market(&base.join(&m.k_th))?;
    let b_ext = match &m.b_ext {
        Some(f) => read_dense(&base.join(f))?,
        None => DMatrix::zeros(k.nrows(), 0),
    };
    let c = read_dense(&base.join(&m.c_mech))?;
    let x = read_matrix_market(&base.join(&m.x_ref))?;
    if x.ncols() != 1 {
        return Err(KmsError::invariant(
            "x_ref",
            "shape",
            format!("{} columns, expected 1", x.ncols()),
        ));
    }
    let x_ref = x.to_dense().column(0).iter().copied().collect();
    let output_names = if m.outputs.is_empty() {
        (0..c.nrows()).map(|i| format!("q{i}")).collect()
    } else {
        m.outputs.clone()
    };
    Ok(MechanicalSystem {
        k,
        k_th,
        b_ext,
        c,
        x_ref,
        output_names,
        free_dofs: m.free_dofs.clone(),
    })
}

/// Reads a sparse matrix that must be square, for callers assembling systems by hand.
pub fn read_square(path: &Path) -> Result<CsrMatrix> {
    let m = read_matrix_market(path)?;
    if !m.is_square() {
        return Err(KmsError::invariant(
            &path.display().to_string(),
            "shape",
            format!("{}x{} is not square", m.nrows(), m.ncols()),
        ));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_rod_1d, BoundaryPatch, MaterialConfig, RodGeometry, ROD_LEFT, ROD_RIGHT};

    fn rod() -> ThermalSystem {
        let g = RodGeometry::new(6, 0.7);
        let patches = [
            BoundaryPatch::convective("left", vec![ROD_LEFT]),
            BoundaryPatch::convective("right", vec![ROD_RIGHT]),
            BoundaryPatch::heat_flux("mid", vec![4]),
        ];
        assemble_rod_1d(&g, &MaterialConfig::steel(), &patches).unwrap()
    }

    #[test]
    fn rod_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let sys = rod();
        let path = save_system(dir.path(), &sys, None).unwrap();
        let (back, mech) = load_system(&path).unwrap();
        assert!(mech.is_none());
        assert_eq!(back, sys);
    }

    #[test]
    fn missing_patch_list_is_non_parametric() {
        let dir = tempfile::tempdir().unwrap();
        let sys = rod();
        save_system(dir.path(), &sys, None).unwrap();
        let text = "[thermal]\nE = \"E.mtx\"\nA = \"A.mtx\"\nB = \"B.mtx\"\nC = \"C.mtx\"\n";
        std::fs::write(dir.path().join("plain.toml"), text).unwrap();
        let (plain, _) = load_system(&dir.path().join("plain.toml")).unwrap();
        assert_eq!(plain.num_patches(), 0);
        assert!(plain.inputs.iter().all(|c| c.kind == InputKind::HeatLoad));
    }

    #[test]
    fn negative_capacity_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let mut sys = rod();
        let mut t: Vec<_> = sys.e.triplets().collect();
        t[0].2 = -1.0;
        sys.e = CsrMatrix::from_triplets(sys.n(), sys.n(), t);
        let path = save_system(dir.path(), &sys, None).unwrap();
        match load_system(&path) {
            Err(KmsError::Invariant { matrix, check, .. }) => {
                assert_eq!(matrix, "E");
                assert_eq!(check, "positive definiteness");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
