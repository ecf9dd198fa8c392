//! Thermal and mechanical FE systems in first-order state-space form.
//!
//! The thermal model is `E ẋ = A x + Σ h_i D_i x + B u`, `y = C x`, with `E` symmetric
//! positive definite, `A` (conduction only) and every `D_i` symmetric negative
//! semi-definite. The mechanical model is quasi-static: `K x_mech = K_th (x - x_ref) + B_ext u_ext`.

mod fe;
mod hexbox;
pub mod io;
mod patches;
mod plate;
mod rod;
mod validate;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KmsError, Result};
use crate::sparse::CsrMatrix;

pub use hexbox::{assemble_box_3d, BoxFace, BoxGeometry, BoxMesh};
pub use io::{load_system, save_system, Manifest};
pub use plate::{assemble_plate_2d, PlateEdge, PlateGeometry, PlateMesh};
pub use rod::{assemble_rod_1d, RodGeometry, RodMesh, ROD_LEFT, ROD_RIGHT};
pub use validate::{validate_mechanical, validate_thermal};

/// Isotropic material constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub density: f64,
    pub heat_capacity: f64,
    pub conductivity: f64,
    pub young_modulus: f64,
    pub poisson: f64,
    pub expansion: f64,
    pub reference_temperature: f64,
}

impl MaterialConfig {
    /// Structural steel.
    pub fn steel() -> Self {
        Self {
            density: 7850.0,
            heat_capacity: 460.0,
            conductivity: 50.0,
            young_modulus: 2.1e11,
            poisson: 0.3,
            expansion: 1.2e-5,
            reference_temperature: 293.15,
        }
    }

    pub fn diffusivity(&self) -> f64 {
        self.conductivity / (self.density * self.heat_capacity)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.density > 0.0, "density must be positive"),
            (self.heat_capacity > 0.0, "heat_capacity must be positive"),
            (self.conductivity > 0.0, "conductivity must be positive"),
            (self.young_modulus > 0.0, "young_modulus must be positive"),
            ((0.0..0.5).contains(&self.poisson), "poisson must lie in [0, 0.5)"),
            (self.expansion >= 0.0, "expansion must be nonnegative"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(KmsError::InvalidInput(format!("material: {msg}")));
            }
        }
        Ok(())
    }
}

/// What a boundary patch does to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatchKind {
    /// Robin condition with a parametric heat transfer coefficient.
    Convective,
    /// Prescribed heat flux; contributes one input column.
    HeatFlux,
    /// Mechanical support. Without `stiffness` the selected dofs are eliminated,
    /// otherwise grounded springs of that stiffness (N/m) are attached.
    FixedDisplacement {
        #[serde(default = "all_axes")]
        axes: [bool; 3],
        #[serde(default)]
        stiffness: Option<f64>,
    },
}

fn all_axes() -> [bool; 3] {
    [true; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    pub name: String,
    pub facets: Vec<usize>,
    /// Spatial HTC / flux weight per facet; empty means 1 everywhere.
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(flatten)]
    pub kind: PatchKind,
}

impl BoundaryPatch {
    pub fn new(name: &str, facets: Vec<usize>, kind: PatchKind) -> Self {
        Self {
            name: name.to_string(),
            facets,
            weights: Vec::new(),
            kind,
        }
    }

    pub fn convective(name: &str, facets: Vec<usize>) -> Self {
        Self::new(name, facets, PatchKind::Convective)
    }

    pub fn heat_flux(name: &str, facets: Vec<usize>) -> Self {
        Self::new(name, facets, PatchKind::HeatFlux)
    }

    pub fn fixed(name: &str, facets: Vec<usize>) -> Self {
        Self::new(
            name,
            facets,
            PatchKind::FixedDisplacement {
                axes: [true; 3],
                stiffness: None,
            },
        )
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(1.0)
    }
}

/// Role of one column of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    /// Heat load in W (per unit flux weight); not scaled by any HTC.
    HeatLoad,
    /// Ambient temperature acting through convective patch `patch`. The column holds the
    /// lumped `∫ n w dΓ` structure; the patch HTC multiplies it at evaluation time.
    Ambient { patch: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChannel {
    pub name: String,
    #[serde(flatten)]
    pub kind: InputKind,
}

/// One value of the heat transfer coefficient per convective patch, W/(m²·K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample(pub Vec<f64>);

impl ParameterSample {
    pub fn zeros(n_c: usize) -> Self {
        Self(vec![0.0; n_c])
    }

    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(v) = h.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(KmsError::InvalidInput(format!(
                "heat transfer coefficients must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self(h))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `h_l ≤ h_m` componentwise.
    pub fn dominated_by(&self, other: &ParameterSample) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|h| format!("{h}")).collect();
        format!("h({})", parts.join(","))
    }
}

/// `E ẋ = (A + Σ h_i D_i) x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSystem {
    pub e: CsrMatrix,
    pub a: CsrMatrix,
    pub d: Vec<CsrMatrix>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub patch_names: Vec<String>,
    pub inputs: Vec<InputChannel>,
    pub output_names: Vec<String>,
}

impl ThermalSystem {
    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn num_patches(&self) -> usize {
        self.d.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn check_sample(&self, sample: &ParameterSample) -> Result<()> {
        if sample.len() != self.num_patches() {
            return Err(KmsError::dim("parameter sample", self.num_patches(), sample.len()));
        }
        Ok(())
    }

    /// `A + Σ h_i D_i`.
    pub fn system_matrix(&self, sample: &ParameterSample) -> Result<CsrMatrix> {
        self.check_sample(sample)?;
        let mut terms = vec![(1.0, &self.a)];
        terms.extend(sample.values().iter().copied().zip(self.d.iter()));
        Ok(CsrMatrix::linear_combination(&terms))
    }

    /// Per-column input scaling: ambient channels carry their patch HTC.
    pub fn input_scaling(&self, sample: &ParameterSample) -> Vec<f64> {
        input_scaling(&self.inputs, self.num_inputs(), sample)
    }

    pub fn effective_b(&self, sample: &ParameterSample) -> DMatrix<f64> {
        scale_columns(&self.b, &self.input_scaling(sample))
    }

    /// Number of dofs touched by each convective patch.
    pub fn patch_dofs(&self) -> Vec<usize> {
        self.d.iter().map(|d| d.support().len()).collect()
    }
}

pub(crate) fn input_scaling(inputs: &[InputChannel], m: usize, sample: &ParameterSample) -> Vec<f64> {
    (0..m)
        .map(|j| match inputs.get(j).map(|c| &c.kind) {
            Some(InputKind::Ambient { patch }) => sample.0.get(*patch).copied().unwrap_or(0.0),
            _ => 1.0,
        })
        .collect()
}

pub(crate) fn scale_columns(b: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = b.clone();
    for (j, &f) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(f);
    }
    out
}

/// `K x_mech = K_th (x - x_ref) + B_ext u_ext`, `y = C_mech x_mech`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalSystem {
    pub k: CsrMatrix,
    pub k_th: CsrMatrix,
    pub b_ext: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x_ref: Vec<f64>,
    pub output_names: Vec<String>,
    /// Global dof (`3·node + axis`) of every retained unknown, when assembled here.
    pub free_dofs: Vec<usize>,
}

impl MechanicalSystem {
    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn thermal_dim(&self) -> usize {
        self.k_th.ncols()
    }

    /// Thermal load `K_th (x - x_ref)` for an absolute temperature field.
    pub fn thermal_load(&self, x: &[f64]) -> Vec<f64> {
        let dx: Vec<f64> = x.iter().zip(&self.x_ref).map(|(a, b)| a - b).collect();
        self.k_th.mul_vec(&dx)
    }
}
