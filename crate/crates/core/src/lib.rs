//! Adaptive symmetric interior-penalty DG for `-Δ_Γ u + u = f` on closed implicit surfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: level-set surfaces, closest-point projection and the lifted geometric
//!   quantities (`δ_h`, `A_h`, `F_h`, `B_h`, ...) that relate the polyhedral surface to the
//!   smooth one.
//! - [`mesh`]: the polyhedral surface, its connectivity, newest-vertex bisection and the
//!   OFF / legacy VTK file formats.
//! - [`dgspace`]: modal polynomial basis, affine element maps and quadrature.
//! - [`assembly`]: the interior-penalty system and a Jacobi-preconditioned CG solver.
//! - [`estimator`]: residual and geometric error indicators, true errors, efficiency.
//! - [`adapt`]: fixed-fraction marking and the standard / geometric refinement drivers.
//! - [`problems`]: benchmark problems (sphere, Dziuk, Enzensberger-Stern).
//! - [`cli`]: run configuration and the CSV / VTK / summary writers behind the `surfdg` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod dgspace;
pub mod estimator;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod problems;

mod error;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
