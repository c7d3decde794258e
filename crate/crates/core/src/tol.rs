//! Numerical tolerances used across the engine.
//!
//! Two regimes: exact algebraic identities of dense double-precision
//! kernels at n <= 20 sit comfortably below 1e-12 absolute, while
//! anything routed through an eigendecomposition or an SVD gets a
//! relative 1e-10 budget.

/// Absolute tolerance for exact algebraic identities (antisymmetry,
/// reassembly, metric compatibility in an orthonormal frame).
pub const EXACT: f64 = 1e-12;

/// Relative tolerance for eigen/SVD-based computations.
pub const EIGEN_REL: f64 = 1e-10;

/// Tolerance for g-orthogonality checks.
pub const ORTHO: f64 = 1e-10;

/// Residual budget for derived identities (curvature relation, canonical
/// connection annihilation, dual-route agreements).
pub const IDENTITY: f64 = 1e-10;

/// Relative membership threshold for classification reports.
pub const MEMBERSHIP_REL: f64 = 1e-8;

/// Below this absolute norm a tensor counts as zero (empty membership).
pub const ZERO_NORM: f64 = 1e-12;

/// Relative eigenvalue-cluster width used by the QR-algebra spectral split.
pub const CLUSTER_REL: f64 = 1e-8;
