//! Config files: the model description read by `generate` and the optional run config
//! shared by `reduce` and `verify`.

use std::path::Path;

use kms_core::model::{
    BoundaryPatch, BoxFace, BoxGeometry, MaterialConfig, PatchKind, PlateEdge, PlateGeometry, RodGeometry, ROD_LEFT,
    ROD_RIGHT,
};
use kms_core::pipeline::ReductionConfig;
use kms_core::{KmsError, Result};
use serde::de::value::{Error as ValueError, StrDeserializer};
use serde::{Deserialize, Serialize};

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| KmsError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| KmsError::Config(format!("{}: {e}", path.display())))
}

/// Material fields left out keep the structural steel value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialOverrides {
    pub density: Option<f64>,
    pub heat_capacity: Option<f64>,
    pub conductivity: Option<f64>,
    pub young_modulus: Option<f64>,
    pub poisson: Option<f64>,
    pub expansion: Option<f64>,
    pub reference_temperature: Option<f64>,
}

impl MaterialOverrides {
    pub fn resolve(&self) -> MaterialConfig {
        let s = MaterialConfig::steel();
        MaterialConfig {
            density: self.density.unwrap_or(s.density),
            heat_capacity: self.heat_capacity.unwrap_or(s.heat_capacity),
            conductivity: self.conductivity.unwrap_or(s.conductivity),
            young_modulus: self.young_modulus.unwrap_or(s.young_modulus),
            poisson: self.poisson.unwrap_or(s.poisson),
            expansion: self.expansion.unwrap_or(s.expansion),
            reference_temperature: self.reference_temperature.unwrap_or(s.reference_temperature),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryConfig {
    Rod(RodGeometry),
    Plate(PlateGeometry),
    Box(BoxGeometry),
}

/// One `[[patch]]` table. `on` names the boundary part: `left`, `right` or `lateral` on a
/// rod, an edge (`x-`, `y+`, ..., `surface`) on a plate, a face (`x-` ... `z+`) on a box.
/// `x`, `y`, `z` keep only facets whose centre lies in the closed interval.
#[derive(Debug, Clone, Deserialize)]
pub struct PatchConfig {
    pub name: String,
    pub on: String,
    #[serde(flatten)]
    pub kind: PatchKind,
    pub x: Option<[f64; 2]>,
    pub y: Option<[f64; 2]>,
    pub z: Option<[f64; 2]>,
    /// Uniform facet weight.
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub material: MaterialOverrides,
    pub geometry: GeometryConfig,
    #[serde(default, rename = "patch")]
    pub patches: Vec<PatchConfig>,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str, what: &str, patch: &str) -> Result<T> {
    T::deserialize(StrDeserializer::<ValueError>::new(s))
        .map_err(|_| KmsError::Config(format!("patch '{patch}': unknown {what} '{s}'")))
}

fn inside(w: Option<[f64; 2]>, v: f64) -> bool {
    w.is_none_or(|[lo, hi]| v >= lo && v <= hi)
}

impl PatchConfig {
    fn finish(&self, facets: Vec<usize>) -> Result<BoundaryPatch> {
        if facets.is_empty() {
            return Err(KmsError::Config(format!(
                "patch '{}': selection contains no facets",
                self.name
            )));
        }
        let n = facets.len();
        let p = BoundaryPatch::new(&self.name, facets, self.kind.clone());
        Ok(match self.weight {
            Some(w) => p.with_weights(vec![w; n]),
            None => p,
        })
    }

    fn no_windows(&self, allowed: &[&str]) -> Result<()> {
        for (axis, w) in [("x", self.x), ("y", self.y), ("z", self.z)] {
            if w.is_some() && !allowed.contains(&axis) {
                return Err(KmsError::Config(format!(
                    "patch '{}': field `{axis}` is not supported on '{}'",
                    self.name, self.on
                )));
            }
        }
        Ok(())
    }
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    pub fn boundary_patches(&self) -> Result<Vec<BoundaryPatch>> {
        self.patches
            .iter()
            .map(|p| match &self.geometry {
                GeometryConfig::Rod(g) => {
                    let facets = match p.on.as_str() {
                        "left" => vec![ROD_LEFT],
                        "right" => vec![ROD_RIGHT],
                        "lateral" => {
                            let [lo, hi] = p.x.unwrap_or([0.0, g.length]);
                            g.mesh().lateral_between(lo, hi)
                        }
                        other => {
                            return Err(KmsError::Config(format!(
                                "patch '{}': unknown rod boundary '{other}' (left, right, lateral)",
                                p.name
                            )))
                        }
                    };
                    p.no_windows(if p.on == "lateral" { &["x"] } else { &[] })?;
                    p.finish(facets)
                }
                GeometryConfig::Plate(g) => {
                    p.no_windows(&[])?;
                    let edge: PlateEdge = parse_enum(&p.on, "plate edge", &p.name)?;
                    p.finish(g.mesh().facets_of(edge))
                }
                GeometryConfig::Box(g) => {
                    let face: BoxFace = parse_enum(&p.on, "box face", &p.name)?;
                    let facets = g
                        .mesh()
                        .facets_where(face, |c| inside(p.x, c[0]) && inside(p.y, c[1]) && inside(p.z, c[2]));
                    p.finish(facets)
                }
            })
            .collect()
    }
}

/// Thresholds and defaults of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// `lo:hi:points`, logarithmic.
    pub grid: String,
    /// Upper end of the band in which accuracy thresholds apply, rad/s.
    pub omega_max: f64,
    /// Largest collocated relative error allowed below `omega_max`.
    pub max_range_error: f64,
    pub eigen_count: usize,
    pub max_eigen_error: f64,
    /// Largest displacement-output relative error allowed below `omega_max`.
    pub max_mech_error: f64,
    /// `ambient`: all ambient channels driven by one temperature; `each`: every input.
    pub mech_input: MechInput,
    pub htc: Vec<String>,
    pub pairs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechInput {
    Ambient,
    Each,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: "1e-5:1:200".into(),
            omega_max: 0.01,
            max_range_error: 0.05,
            eigen_count: 20,
            max_eigen_error: 1e-3,
            max_mech_error: 1e-2,
            mech_input: MechInput::Ambient,
            htc: Vec::new(),
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub reduction: ReductionConfig,
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_toml(p),
            None => Ok(Self::default()),
        }
    }
}
