use thiserror::Error;

/// Errors produced by the frame-level geometry engine.
#[derive(Debug, Error)]
pub enum GeoError {
    #[error("shape mismatch: {0}")]
    InputShape(String),

    #[error("endomorphism is not g-orthogonal (residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("metric is not symmetric positive definite: {0}")]
    BadMetric(String),

    #[error("structure invariant violated: {0}")]
    StructureInvalid(String),

    #[error("(I - S) is singular on the non-mirror block (min singular value {min_sv:.3e})")]
    SingularOneMinusS { min_sv: f64 },

    #[error("affinor is singular; polar decomposition is not unique")]
    SingularAffinor,

    #[error("dimension too small for this operation: {0}")]
    DegenerateDimension(String),

    #[error("h is not nearly particular (|h+| = {sym_norm:.3e})")]
    NotNearlyParticular { sym_norm: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("invalid catalog parameters: {0}")]
    InvalidParams(String),

    #[error("sigma affinor spectrum not covered by the induction rules: {0}")]
    UnsupportedSpectrum(String),

    #[error("taxonomy construction failed for component {component}: computed dim {got}, expected {expected}")]
    TaxonomyConstruction {
        component: String,
        got: usize,
        expected: usize,
    },

    #[error("tensor violates the ambient symmetries (residual {residual:.3e})")]
    AmbientViolation { residual: f64 },

    #[error("internal identity tripwire: {0}")]
    InternalInconsistency(String),

    #[error("ideal decomposition failed to stabilize")]
    DecompositionFailure,

    #[error("matrix series did not converge (error estimate {estimate:.3e})")]
    NonConvergence { estimate: f64 },
}

pub type Result<T> = std::result::Result<T, GeoError>;
