use thiserror::Error;

/// Errors produced by validation and decomposition routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("alpha block is not hermitian (relative defect {defect:.3e})")]
    AlphaNotHermitian { defect: f64 },

    #[error("zeta block is not {expected} (relative defect {defect:.3e})")]
    ZetaWrongSymmetry { expected: &'static str, defect: f64 },

    #[error("bosonic Hamilton matrix is not positive-definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("degenerate-subspace pairing failed: {context}")]
    DegeneratePairing { context: String },

    #[error("normal-mode decomposition failed verification: {relation} defect {defect:.3e}")]
    DecompositionDefect { relation: &'static str, defect: f64 },

    #[error("invalid Bogoliubov input: squeeze consistency defect {defect:.3e}")]
    SqueezeInconsistent { defect: f64 },

    #[error("input matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("invalid thermal specification: {context}")]
    InvalidThermalSpec { context: String },

    #[error("gate kind {kind} is not valid for {species} systems")]
    InvalidGateKind { kind: String, species: String },

    #[error("gate sites {sites:?} are not adjacent")]
    NonAdjacentSites { sites: Vec<usize> },

    #[error("MPO has zero trace")]
    ZeroTrace,

    #[error("chain coefficients did not converge under quadrature refinement (defect {defect:.3e})")]
    ChainNotConverged { defect: f64 },

    #[error("dense oracle dimension {dim} exceeds cap {cap}")]
    OracleDimension { dim: usize, cap: usize },

    #[error("invalid configuration: {context}")]
    InvalidConfig { context: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
