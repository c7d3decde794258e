//! Frame-level engine for Riemannian metrics paired with a geometric
//! structure tensor (almost product, almost Hermitian, f-structure,
//! almost contact metric, or sigma affinor).
//!
//! Given a metric Lie algebra in a fixed frame, the crate computes the
//! Levi-Civita connection, the canonical connection of the structure, the
//! second fundamental tensor `h = nabla - nabla_bar`, derived invariants
//! (torsion, curvature, Nijenhuis tensors, trace forms, the r1/r2
//! operators and the QR-algebra attached to nearly particular h), and
//! classifies `h` under three irreducible-decomposition taxonomies.

pub mod analysis;
pub mod catalog;
pub mod classify;
pub mod error;
pub mod lie;
pub mod qr;
pub mod selftest;
pub mod structures;
pub mod tensor;
pub mod tol;

pub use error::{GeoError, Result};
