//! KMS basis construction and one-sided projection.

mod basis;
mod krylov;
mod modal;
pub mod ortho;
mod project;

pub use basis::{ColumnTag, ReductionBasis};
pub use krylov::{build_krylov_block, ShiftedSolver};
pub use modal::{
    compute_modal_basis, count_eigenvalues_below, smallest_eigenpairs, zero_threshold, ModalBasis, ModalOptions,
};
pub use ortho::{orth, orthonormality_error, Orthonormalizer, DROP_TOL};
pub(crate) use project::congruence_checked;
pub use project::{combine_kms, project, ModelKind, ReducedModel};
