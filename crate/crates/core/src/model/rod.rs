use serde::{Deserialize, Serialize};

use super::patches::{finish_thermal, FacetMesh};
use super::{BoundaryPatch, MaterialConfig, PatchKind, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::sparse::TripletBuilder;

/// Facet id of the left end face.
pub const ROD_LEFT: usize = 0;
/// Facet id of the right end face.
pub const ROD_RIGHT: usize = 1;

/// Straight rod of constant cross-section discretized with linear elements.
///
/// Facets: `0` left end face, `1` right end face, `2 + e` lateral surface of element `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodGeometry {
    pub num_elements: usize,
    pub length: f64,
    #[serde(default = "unit")]
    pub area: f64,
    #[serde(default = "unit")]
    pub perimeter: f64,
    #[serde(default)]
    pub consistent_capacity: bool,
}

fn unit() -> f64 {
    1.0
}

impl RodGeometry {
    pub fn new(num_elements: usize, length: f64) -> Self {
        Self {
            num_elements,
            length,
            area: 1.0,
            perimeter: 1.0,
            consistent_capacity: false,
        }
    }

    pub fn mesh(&self) -> RodMesh {
        RodMesh { geom: *self }
    }
}

pub struct RodMesh {
    geom: RodGeometry,
}

impl RodMesh {
    pub fn lateral_facets(&self) -> Vec<usize> {
        (0..self.geom.num_elements).map(|e| 2 + e).collect()
    }

    /// Lateral facets of the elements whose midpoint lies in `[from, to]` (m).
    pub fn lateral_between(&self, from: f64, to: f64) -> Vec<usize> {
        let h = self.geom.length / self.geom.num_elements as f64;
        (0..self.geom.num_elements)
            .filter(|&e| {
                let mid = (e as f64 + 0.5) * h;
                mid >= from && mid <= to
            })
            .map(|e| 2 + e)
            .collect()
    }
}

impl FacetMesh for RodMesh {
    fn num_nodes(&self) -> usize {
        self.geom.num_elements + 1
    }

    fn num_facets(&self) -> usize {
        self.geom.num_elements + 2
    }

    fn facet(&self, id: usize) -> (Vec<usize>, f64) {
        let ne = self.geom.num_elements;
        match id {
            0 => (vec![0], self.geom.area),
            1 => (vec![ne], self.geom.area),
            _ => {
                let e = id - 2;
                let h = self.geom.length / ne as f64;
                (vec![e, e + 1], self.geom.perimeter * h)
            }
        }
    }
}

pub fn assemble_rod_1d(
    geom: &RodGeometry,
    material: &MaterialConfig,
    patches: &[BoundaryPatch],
) -> Result<ThermalSystem> {
    material.validate()?;
    if geom.num_elements < 2 {
        return Err(KmsError::InvalidInput("rod needs at least 2 elements".into()));
    }
    if !(geom.length > 0.0 && geom.area > 0.0 && geom.perimeter >= 0.0) {
        return Err(KmsError::InvalidInput("rod length and area must be positive".into()));
    }
    if let Some(p) = patches
        .iter()
        .find(|p| matches!(p.kind, PatchKind::FixedDisplacement { .. }))
    {
        return Err(KmsError::InvalidInput(format!(
            "patch '{}': the rod model has no mechanical part",
            p.name
        )));
    }
    let ne = geom.num_elements;
    let n = ne + 1;
    let h = geom.length / ne as f64;
    let k = material.conductivity * geom.area / h;
    let c = material.density * material.heat_capacity * geom.area * h;
    let mut a = TripletBuilder::new(n, n);
    let mut e = TripletBuilder::new(n, n);
    for el in 0..ne {
        let nodes = [el, el + 1];
        for (p, &i) in nodes.iter().enumerate() {
            for (q, &j) in nodes.iter().enumerate() {
                a.push(i, j, if p == q { -k } else { k });
                if geom.consistent_capacity {
                    e.push(i, j, if p == q { c / 3.0 } else { c / 6.0 });
                } else if p == q {
                    e.push(i, j, c / 2.0);
                }
            }
        }
    }
    finish_thermal(&geom.mesh(), e.build(), a.build(), patches)
}
