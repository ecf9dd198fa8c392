use serde::{Deserialize, Serialize};

use super::fe::{quad_conduction, quad_mass};
use super::patches::{finish_thermal, FacetMesh};
use super::{BoundaryPatch, MaterialConfig, PatchKind, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::sparse::TripletBuilder;

/// Rectangular plate of constant thickness, bilinear quads in the x-y plane.
///
/// Facets are the boundary edges (`y-`, `x+`, `y+`, `x-`, in that order, each
/// enumerated along the edge) followed by one top-surface facet per element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateGeometry {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub thickness: f64,
    #[serde(default)]
    pub consistent_capacity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlateEdge {
    #[serde(rename = "y-")]
    YMinus,
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "y+")]
    YPlus,
    #[serde(rename = "x-")]
    XMinus,
    #[serde(rename = "surface")]
    Surface,
}

pub struct PlateMesh {
    g: PlateGeometry,
}

impl PlateGeometry {
    pub fn mesh(&self) -> PlateMesh {
        PlateMesh { g: *self }
    }
}

impl PlateMesh {
    pub fn node(&self, i: usize, j: usize) -> usize {
        i + (self.g.nx + 1) * j
    }

    pub fn facets_of(&self, edge: PlateEdge) -> Vec<usize> {
        let (nx, ny) = (self.g.nx, self.g.ny);
        let range = match edge {
            PlateEdge::YMinus => 0..nx,
            PlateEdge::XPlus => nx..nx + ny,
            PlateEdge::YPlus => nx + ny..2 * nx + ny,
            PlateEdge::XMinus => 2 * nx + ny..2 * (nx + ny),
            PlateEdge::Surface => 2 * (nx + ny)..2 * (nx + ny) + nx * ny,
        };
        range.collect()
    }
}

impl FacetMesh for PlateMesh {
    fn num_nodes(&self) -> usize {
        (self.g.nx + 1) * (self.g.ny + 1)
    }

    fn num_facets(&self) -> usize {
        2 * (self.g.nx + self.g.ny) + self.g.nx * self.g.ny
    }

    fn facet(&self, id: usize) -> (Vec<usize>, f64) {
        let (nx, ny) = (self.g.nx, self.g.ny);
        let hx = self.g.lx / nx as f64;
        let hy = self.g.ly / ny as f64;
        let t = self.g.thickness;
        if id < nx {
            (vec![self.node(id, 0), self.node(id + 1, 0)], hx * t)
        } else if id < nx + ny {
            let j = id - nx;
            (vec![self.node(nx, j), self.node(nx, j + 1)], hy * t)
        } else if id < 2 * nx + ny {
            let i = id - nx - ny;
            (vec![self.node(i, ny), self.node(i + 1, ny)], hx * t)
        } else if id < 2 * (nx + ny) {
            let j = id - 2 * nx - ny;
            (vec![self.node(0, j), self.node(0, j + 1)], hy * t)
        } else {
            let q = id - 2 * (nx + ny);
            let (i, j) = (q % nx, q / nx);
            (
                vec![
                    self.node(i, j),
                    self.node(i + 1, j),
                    self.node(i + 1, j + 1),
                    self.node(i, j + 1),
                ],
                hx * hy,
            )
        }
    }
}

pub fn assemble_plate_2d(
    geom: &PlateGeometry,
    material: &MaterialConfig,
    patches: &[BoundaryPatch],
) -> Result<ThermalSystem> {
    material.validate()?;
    if geom.nx < 2 || geom.ny < 2 {
        return Err(KmsError::InvalidInput(
            "plate needs at least 2 elements per direction".into(),
        ));
    }
    if !(geom.lx > 0.0 && geom.ly > 0.0 && geom.thickness > 0.0) {
        return Err(KmsError::InvalidInput("plate dimensions must be positive".into()));
    }
    if let Some(p) = patches
        .iter()
        .find(|p| matches!(p.kind, PatchKind::FixedDisplacement { .. }))
    {
        return Err(KmsError::InvalidInput(format!(
            "patch '{}': the plate model has no mechanical part",
            p.name
        )));
    }
    let mesh = geom.mesh();
    let n = mesh.num_nodes();
    let hx = geom.lx / geom.nx as f64;
    let hy = geom.ly / geom.ny as f64;
    let ke = quad_conduction(hx, hy, material.conductivity * geom.thickness);
    let rho_c = material.density * material.heat_capacity * geom.thickness;
    let me = quad_mass(hx, hy, rho_c);
    let mut a = TripletBuilder::new(n, n);
    let mut e = TripletBuilder::new(n, n);
    for j in 0..geom.ny {
        for i in 0..geom.nx {
            let nodes = [
                mesh.node(i, j),
                mesh.node(i + 1, j),
                mesh.node(i + 1, j + 1),
                mesh.node(i, j + 1),
            ];
            for p in 0..4 {
                for q in 0..4 {
                    a.push(nodes[p], nodes[q], -ke[p][q]);
                    if geom.consistent_capacity {
                        e.push(nodes[p], nodes[q], me[p][q]);
                    }
                }
                if !geom.consistent_capacity {
                    e.push(nodes[p], nodes[p], rho_c * hx * hy / 4.0);
                }
            }
        }
    }
    finish_thermal(&mesh, e.build(), a.build(), patches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_capacity_and_surface_patch() {
        let g = PlateGeometry {
            nx: 4,
            ny: 3,
            lx: 0.4,
            ly: 0.3,
            thickness: 0.01,
            consistent_capacity: false,
        };
        let mesh = g.mesh();
        let m = MaterialConfig::steel();
        let patches = [
            BoundaryPatch::convective("face", mesh.facets_of(PlateEdge::Surface)),
            BoundaryPatch::heat_flux("edge", mesh.facets_of(PlateEdge::XMinus)),
        ];
        let sys = assemble_plate_2d(&g, &m, &patches).unwrap();
        assert_eq!(sys.n(), 20);
        let cap: f64 = sys.e.diagonal().iter().sum();
        let expected = m.density * m.heat_capacity * 0.4 * 0.3 * 0.01;
        assert!((cap - expected).abs() < 1e-9 * expected);
        let area: f64 = -sys.d[0].diagonal().iter().sum::<f64>();
        assert!((area - 0.12).abs() < 1e-14);
        let edge: f64 = sys.b.column(0).iter().sum();
        assert!((edge - 0.003).abs() < 1e-15);
        let ones = vec![1.0; sys.n()];
        assert!(sys.a.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    }
}
