//! Krylov modal subspace (KMS) model order reduction for weakly coupled
//! thermo-mechanical systems with parametric convective boundaries.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bundle;
pub mod error;
pub mod error_bound;
mod fsutil;
pub mod linalg;
pub mod mech;
pub mod model;
pub mod mtx;
mod par;
pub mod param;
pub mod pipeline;
pub mod reduction;
pub mod skyline;
pub mod sparse;

pub use error::{KmsError, Result};
pub use fsutil::write_atomic;
