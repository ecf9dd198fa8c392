// Boundary patch handling shared by the rod, plate and box generators.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{BoundaryPatch, InputChannel, InputKind, PatchKind, ThermalSystem};
use crate::error::{KmsError, Result};
use crate::sparse::CsrMatrix;

/// A mesh whose boundary is split into numbered facets.
pub(crate) trait FacetMesh {
    fn num_nodes(&self) -> usize;
    fn num_facets(&self) -> usize;
    /// Nodes of a facet and its measure (area in 3D/2D-with-thickness, m²).
    fn facet(&self, id: usize) -> (Vec<usize>, f64);
}

/// Lumped `∫ n w dΓ` of a patch as a nodal vector.
pub(crate) fn lumped_patch_vector<M: FacetMesh>(mesh: &M, patch: &BoundaryPatch) -> Result<Vec<f64>> {
    if !patch.weights.is_empty() && patch.weights.len() != patch.facets.len() {
        return Err(KmsError::InvalidInput(format!(
            "patch '{}': {} weights for {} facets",
            patch.name,
            patch.weights.len(),
            patch.facets.len()
        )));
    }
    let mut v = vec![0.0; mesh.num_nodes()];
    for (k, &f) in patch.facets.iter().enumerate() {
        if f >= mesh.num_facets() {
            return Err(KmsError::InvalidInput(format!(
                "patch '{}': facet {f} out of range (mesh has {} facets)",
                patch.name,
                mesh.num_facets()
            )));
        }
        let w = patch.weight(k);
        if !(w >= 0.0) {
            return Err(KmsError::InvalidInput(format!(
                "patch '{}': negative weight {w}",
                patch.name
            )));
        }
        let (nodes, measure) = mesh.facet(f);
        let share = w * measure / nodes.len() as f64;
        for n in nodes {
            v[n] += share;
        }
    }
    if v.iter().sum::<f64>() <= 0.0 {
        return Err(KmsError::InvalidInput(format!(
            "patch '{}' has zero measure",
            patch.name
        )));
    }
    Ok(v)
}

/// Rejects convective patches that share a facet or a node.
pub(crate) fn check_disjoint<M: FacetMesh>(mesh: &M, patches: &[&BoundaryPatch]) -> Result<()> {
    let mut facet_owner: HashMap<usize, usize> = HashMap::new();
    let mut node_owner: HashMap<usize, usize> = HashMap::new();
    for (p, patch) in patches.iter().enumerate() {
        for &f in &patch.facets {
            if let Some(&q) = facet_owner.get(&f) {
                if q != p {
                    return Err(KmsError::PatchOverlap {
                        first: patches[q].name.clone(),
                        second: patch.name.clone(),
                        location: format!("facet {f}"),
                    });
                }
            }
            facet_owner.insert(f, p);
        }
    }
    for (p, patch) in patches.iter().enumerate() {
        for &f in &patch.facets {
            if f >= mesh.num_facets() {
                continue;
            }
            for n in mesh.facet(f).0 {
                match node_owner.get(&n) {
                    Some(&q) if q != p => {
                        return Err(KmsError::PatchOverlap {
                            first: patches[q].name.clone(),
                            second: patch.name.clone(),
                            location: format!("node {n}"),
                        })
                    }
                    _ => {
                        node_owner.insert(n, p);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Adds convection matrices and input/output channels to conduction and capacity
/// matrices that were assembled by a geometry generator.
pub(crate) fn finish_thermal<M: FacetMesh>(
    mesh: &M,
    e: CsrMatrix,
    a: CsrMatrix,
    patches: &[BoundaryPatch],
) -> Result<ThermalSystem> {
    let n = mesh.num_nodes();
    let mut names = std::collections::HashSet::new();
    for p in patches {
        if !names.insert(p.name.as_str()) {
            return Err(KmsError::InvalidInput(format!("duplicate patch name '{}'", p.name)));
        }
    }
    let convective: Vec<&BoundaryPatch> = patches.iter().filter(|p| p.kind == PatchKind::Convective).collect();
    check_disjoint(mesh, &convective)?;

    let mut d = Vec::new();
    let mut patch_names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut inputs = Vec::new();
    for p in patches.iter().filter(|p| p.kind == PatchKind::HeatFlux) {
        columns.push(lumped_patch_vector(mesh, p)?);
        inputs.push(InputChannel {
            name: p.name.clone(),
            kind: InputKind::HeatLoad,
        });
    }
    for (i, p) in convective.iter().enumerate() {
        let w = lumped_patch_vector(mesh, p)?;
        d.push(CsrMatrix::from_triplets(
            n,
            n,
            w.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, &v)| (k, k, -v)),
        ));
        patch_names.push(p.name.clone());
        columns.push(w);
        inputs.push(InputChannel {
            name: format!("{}_ambient", p.name),
            kind: InputKind::Ambient { patch: i },
        });
    }
    let m = columns.len();
    let b = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
    let c = b.transpose();
    let output_names = inputs.iter().map(|c| c.name.clone()).collect();
    Ok(ThermalSystem {
        e,
        a,
        d,
        b,
        c,
        patch_names,
        inputs,
        output_names,
    })
}
