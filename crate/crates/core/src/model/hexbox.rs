use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fe::{hex_conduction, hex_elasticity, hex_mass, HEX_NODES};
use super::patches::{finish_thermal, FacetMesh};
use super::{BoundaryPatch, MaterialConfig, MechanicalSystem, PatchKind, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::skyline::LdltFactor;
use crate::sparse::TripletBuilder;

/// Axis-aligned box `[0,lx]×[0,ly]×[0,lz]` meshed with `nx×ny×nz` trilinear bricks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    #[serde(default)]
    pub consistent_capacity: bool,
    /// Grid nodes `(i, j, k)` whose x/y/z displacements are mechanical outputs.
    #[serde(default)]
    pub mech_outputs: Vec<[usize; 3]>,
    /// Unit point forces `(node, axis)` forming the external mechanical inputs.
    #[serde(default)]
    pub force_inputs: Vec<([usize; 3], usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxFace {
    #[serde(rename = "x-")]
    XMinus,
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "y-")]
    YMinus,
    #[serde(rename = "y+")]
    YPlus,
    #[serde(rename = "z-")]
    ZMinus,
    #[serde(rename = "z+")]
    ZPlus,
}

impl BoxFace {
    pub const ALL: [BoxFace; 6] = [
        BoxFace::XMinus,
        BoxFace::XPlus,
        BoxFace::YMinus,
        BoxFace::YPlus,
        BoxFace::ZMinus,
        BoxFace::ZPlus,
    ];

    fn axis(self) -> usize {
        match self {
            BoxFace::XMinus | BoxFace::XPlus => 0,
            BoxFace::YMinus | BoxFace::YPlus => 1,
            BoxFace::ZMinus | BoxFace::ZPlus => 2,
        }
    }

    fn is_max(self) -> bool {
        matches!(self, BoxFace::XPlus | BoxFace::YPlus | BoxFace::ZPlus)
    }
}

impl BoxGeometry {
    pub fn new(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Self {
        Self {
            nx,
            ny,
            nz,
            lx,
            ly,
            lz,
            consistent_capacity: false,
            mech_outputs: Vec::new(),
            force_inputs: Vec::new(),
        }
    }

    pub fn mesh(&self) -> BoxMesh {
        BoxMesh {
            n: [self.nx, self.ny, self.nz],
            h: [
                self.lx / self.nx as f64,
                self.ly / self.ny as f64,
                self.lz / self.nz as f64,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoxMesh {
    n: [usize; 3],
    h: [f64; 3],
}

impl BoxMesh {
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.n[0] + 1) * (j + (self.n[1] + 1) * k)
    }

    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let i = node % (self.n[0] + 1);
        let j = (node / (self.n[0] + 1)) % (self.n[1] + 1);
        let k = node / ((self.n[0] + 1) * (self.n[1] + 1));
        [i as f64 * self.h[0], j as f64 * self.h[1], k as f64 * self.h[2]]
    }

    /// The two in-face axes of a face, in enumeration order.
    fn face_axes(face: BoxFace) -> (usize, usize) {
        match face.axis() {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    fn face_size(&self, face: BoxFace) -> usize {
        let (u, v) = Self::face_axes(face);
        self.n[u] * self.n[v]
    }

    fn face_offset(&self, face: BoxFace) -> usize {
        BoxFace::ALL
            .iter()
            .take_while(|f| **f != face)
            .map(|f| self.face_size(*f))
            .sum()
    }

    pub fn facets_of(&self, face: BoxFace) -> Vec<usize> {
        let off = self.face_offset(face);
        (off..off + self.face_size(face)).collect()
    }

    /// Facets of `face` whose centre satisfies `pred(x, y, z)`.
    pub fn facets_where<F: Fn([f64; 3]) -> bool>(&self, face: BoxFace, pred: F) -> Vec<usize> {
        self.facets_of(face)
            .into_iter()
            .filter(|&f| {
                let (nodes, _) = self.facet(f);
                let mut c = [0.0; 3];
                for &nd in &nodes {
                    let x = self.node_coords(nd);
                    for d in 0..3 {
                        c[d] += x[d] / nodes.len() as f64;
                    }
                }
                pred(c)
            })
            .collect()
    }

    fn locate(&self, id: usize) -> (BoxFace, usize) {
        let mut off = 0;
        for f in BoxFace::ALL {
            let s = self.face_size(f);
            if id < off + s {
                return (f, id - off);
            }
            off += s;
        }
        panic!("facet {id} out of range");
    }
}

impl FacetMesh for BoxMesh {
    fn num_nodes(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1) * (self.n[2] + 1)
    }

    fn num_facets(&self) -> usize {
        BoxFace::ALL.iter().map(|f| self.face_size(*f)).sum()
    }

    fn facet(&self, id: usize) -> (Vec<usize>, f64) {
        let (face, local) = self.locate(id);
        let (u, v) = Self::face_axes(face);
        let w = face.axis();
        let (a, b) = (local % self.n[u], local / self.n[u]);
        let fixed = if face.is_max() { self.n[w] } else { 0 };
        let corner = |du: usize, dv: usize| {
            let mut ijk = [0usize; 3];
            ijk[u] = a + du;
            ijk[v] = b + dv;
            ijk[w] = fixed;
            self.node(ijk[0], ijk[1], ijk[2])
        };
        (
            vec![corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)],
            self.h[u] * self.h[v],
        )
    }
}

fn element_nodes(mesh: &BoxMesh, i: usize, j: usize, k: usize) -> [usize; 8] {
    let mut out = [0; 8];
    for (a, s) in HEX_NODES.iter().enumerate() {
        let d = |x: f64| usize::from(x > 0.0);
        out[a] = mesh.node(i + d(s[0]), j + d(s[1]), k + d(s[2]));
    }
    out
}

fn assemble_thermal_matrices(
    geom: &BoxGeometry,
    material: &MaterialConfig,
    mesh: &BoxMesh,
) -> (TripletBuilder, TripletBuilder) {
    let n = mesh.num_nodes();
    let ke = hex_conduction(mesh.h, material.conductivity);
    let rho_c = material.density * material.heat_capacity;
    let me = hex_mass(mesh.h, rho_c);
    let vol = mesh.h[0] * mesh.h[1] * mesh.h[2];
    let mut a = TripletBuilder::new(n, n);
    let mut e = TripletBuilder::new(n, n);
    for k in 0..geom.nz {
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                let nodes = element_nodes(mesh, i, j, k);
                for p in 0..8 {
                    for q in 0..8 {
                        a.push(nodes[p], nodes[q], -ke[p][q]);
                        if geom.consistent_capacity {
                            e.push(nodes[p], nodes[q], me[p][q]);
                        }
                    }
                    if !geom.consistent_capacity {
                        e.push(nodes[p], nodes[p], rho_c * vol / 8.0);
                    }
                }
            }
        }
    }
    (e, a)
}

/// Thermal and quasi-static mechanical systems of a box. At least one
/// `FixedDisplacement` patch is required.
pub fn assemble_box_3d(
    geom: &BoxGeometry,
    material: &MaterialConfig,
    patches: &[BoundaryPatch],
) -> Result<(ThermalSystem, MechanicalSystem)> {
    material.validate()?;
    if geom.nx < 2 || geom.ny < 2 || geom.nz < 2 {
        return Err(KmsError::InvalidInput(
            "box needs at least 2 elements per direction".into(),
        ));
    }
    if !(geom.lx > 0.0 && geom.ly > 0.0 && geom.lz > 0.0) {
        return Err(KmsError::InvalidInput("box dimensions must be positive".into()));
    }
    let mesh = geom.mesh();
    let nn = mesh.num_nodes();
    let (e, a) = assemble_thermal_matrices(geom, material, &mesh);
    let thermal = finish_thermal(&mesh, e.build(), a.build(), patches)?;

    let supports: Vec<&BoundaryPatch> = patches
        .iter()
        .filter(|p| matches!(p.kind, PatchKind::FixedDisplacement { .. }))
        .collect();
    if supports.is_empty() {
        return Err(KmsError::InvalidInput(
            "box needs a fixed_displacement patch for its mechanical part".into(),
        ));
    }

    let ndof = 3 * nn;
    let (ke, kthe) = hex_elasticity(mesh.h, material.young_modulus, material.poisson, material.expansion);
    let mut k = TripletBuilder::new(ndof, ndof);
    let mut kth = TripletBuilder::new(ndof, nn);
    for kk in 0..geom.nz {
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                let nodes = element_nodes(&mesh, i, j, kk);
                for p in 0..24 {
                    let gp = 3 * nodes[p / 3] + p % 3;
                    for q in 0..24 {
                        k.push(gp, 3 * nodes[q / 3] + q % 3, ke[p][q]);
                    }
                    for t in 0..8 {
                        kth.push(gp, nodes[t], kthe[p][t]);
                    }
                }
            }
        }
    }

    let mut fixed = BTreeSet::new();
    for s in &supports {
        let PatchKind::FixedDisplacement { axes, stiffness } = &s.kind else {
            unreachable!()
        };
        let mut nodes = BTreeSet::new();
        for &f in &s.facets {
            if f >= mesh.num_facets() {
                return Err(KmsError::InvalidInput(format!(
                    "patch '{}': facet {f} out of range",
                    s.name
                )));
            }
            nodes.extend(mesh.facet(f).0);
        }
        if nodes.is_empty() {
            return Err(KmsError::InvalidInput(format!("patch '{}' selects no nodes", s.name)));
        }
        for nd in nodes {
            for (ax, &on) in axes.iter().enumerate() {
                if !on {
                    continue;
                }
                match stiffness {
                    Some(kv) => k.push(3 * nd + ax, 3 * nd + ax, *kv),
                    None => {
                        fixed.insert(3 * nd + ax);
                    }
                }
            }
        }
    }
    let free: Vec<usize> = (0..ndof).filter(|d| !fixed.contains(d)).collect();
    let all_nodes: Vec<usize> = (0..nn).collect();
    let k_full = k.build();
    let k_red = k_full.select(&free, &free);
    let kth_red = kth.build().select(&free, &all_nodes);

    let mut position = vec![usize::MAX; ndof];
    for (r, &g) in free.iter().enumerate() {
        position[g] = r;
    }
    let node_index = |ijk: &[usize; 3]| -> Result<usize> {
        if ijk[0] > geom.nx || ijk[1] > geom.ny || ijk[2] > geom.nz {
            return Err(KmsError::InvalidInput(format!(
                "grid node {ijk:?} outside the {}x{}x{} box",
                geom.nx, geom.ny, geom.nz
            )));
        }
        Ok(mesh.node(ijk[0], ijk[1], ijk[2]))
    };
    let nf = free.len();
    let mut c = DMatrix::zeros(3 * geom.mech_outputs.len(), nf);
    let mut output_names = Vec::new();
    for (o, ijk) in geom.mech_outputs.iter().enumerate() {
        let nd = node_index(ijk)?;
        for ax in 0..3 {
            if position[3 * nd + ax] != usize::MAX {
                c[(3 * o + ax, position[3 * nd + ax])] = 1.0;
            }
            output_names.push(format!("u{}_{}_{}_{}", ["x", "y", "z"][ax], ijk[0], ijk[1], ijk[2]));
        }
    }
    let mut b_ext = DMatrix::zeros(nf, geom.force_inputs.len());
    for (col, (ijk, ax)) in geom.force_inputs.iter().enumerate() {
        let nd = node_index(ijk)?;
        if *ax > 2 {
            return Err(KmsError::InvalidInput(format!("force axis {ax} out of range")));
        }
        if position[3 * nd + ax] != usize::MAX {
            b_ext[(position[3 * nd + ax], col)] = 1.0;
        }
    }

    if let Err(KmsError::Singular { .. }) = LdltFactor::factor(&k_red, "K") {
        return Err(KmsError::InvalidInput(
            "unconstrained mechanical system: stiffness matrix K is singular".into(),
        ));
    }

    let mech = MechanicalSystem {
        k: k_red,
        k_th: kth_red,
        b_ext,
        c,
        x_ref: vec![material.reference_temperature; nn],
        output_names,
        free_dofs: free,
    };
    Ok((thermal, mech))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facet_numbering_covers_every_face_once() {
        let g = BoxGeometry::new(3, 2, 4, 0.3, 0.2, 0.4);
        let mesh = g.mesh();
        assert_eq!(mesh.num_facets(), 2 * (2 * 4 + 3 * 4 + 3 * 2));
        let mut area = 0.0;
        for f in 0..mesh.num_facets() {
            area += mesh.facet(f).1;
        }
        let expected = 2.0 * (0.3 * 0.2 + 0.3 * 0.4 + 0.2 * 0.4);
        assert!((area - expected).abs() < 1e-12);
        // z+ facets only touch top nodes
        for f in mesh.facets_of(BoxFace::ZPlus) {
            for nd in mesh.facet(f).0 {
                assert!((mesh.node_coords(nd)[2] - 0.4).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn missing_support_is_reported() {
        let g = BoxGeometry::new(2, 2, 2, 1.0, 1.0, 1.0);
        let err = assemble_box_3d(&g, &MaterialConfig::steel(), &[]).unwrap_err();
        assert!(err.to_string().contains("fixed_displacement"));
    }

    #[test]
    fn insufficient_support_reports_singular_stiffness() {
        let g = BoxGeometry::new(2, 2, 2, 1.0, 1.0, 1.0);
        let mesh = g.mesh();
        // rollers on a single face leave in-plane rigid motions free
        let p = BoundaryPatch::new(
            "roller",
            mesh.facets_of(BoxFace::ZMinus),
            PatchKind::FixedDisplacement {
                axes: [false, false, true],
                stiffness: None,
            },
        );
        let err = assemble_box_3d(&g, &MaterialConfig::steel(), &[p]).unwrap_err();
        assert!(err.to_string().contains("singular"), "{err}");
    }

    #[test]
    fn box_capacity_totals_body_capacity() {
        let g = BoxGeometry::new(2, 3, 2, 0.2, 0.3, 0.1);
        let m = MaterialConfig::steel();
        let fixed = BoundaryPatch::fixed("clamp", g.mesh().facets_of(BoxFace::XMinus));
        let (th, mech) = assemble_box_3d(&g, &m, &[fixed]).unwrap();
        let cap: f64 = th.e.diagonal().iter().sum();
        let expected = m.density * m.heat_capacity * 0.006;
        assert!((cap - expected).abs() < 1e-9 * expected);
        assert_eq!(mech.n(), 3 * th.n() - 3 * 12);
        assert!(mech.k.asymmetry() <= 1e-12 * mech.k.max_abs());
    }
}
