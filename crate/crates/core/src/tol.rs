//! Central numerical tolerances.
//!
//! Every threshold used by validation logic lives here so that the contracts
//! of the individual operations stay consistent with each other.

/// Hermiticity / (anti)symmetry of input matrices, relative Frobenius.
pub const INPUT_SYMMETRY: f64 = 1e-12;

/// Block-structure defect of a Bogoliubov matrix, relative Frobenius.
pub const BOGOLIUBOV_BLOCK: f64 = 1e-12;

/// Symplectic (bosonic) and unitarity (fermionic) relations of a Bogoliubov
/// matrix, and the diagonalization property of a normal-mode decomposition.
pub const BOGOLIUBOV_RELATION: f64 = 1e-10;

/// Bloch-Messiah reconstruction error, Frobenius.
pub const BLOCH_MESSIAH_RECONSTRUCTION: f64 = 1e-10;

/// Consistency of squeeze singular values (cosh^2 - sinh^2 = 1 for bosons,
/// cos^2 + sin^2 = 1 for fermions). Violations beyond this signal an input
/// that is not a valid Bogoliubov matrix.
pub const SQUEEZE_CONSISTENCY: f64 = 1e-8;

/// Classification threshold between blocked and paired fermionic modes:
/// a mu-block singular value below this counts as 0 (identity mode), a
/// gamma-block singular value below this counts as 0 (swap mode).
pub const FERMI_BLOCK_CLASSIFY: f64 = 1e-8;

/// Clustering of degenerate singular values inside the Bloch-Messiah
/// decomposition. Finer than the reconstruction tolerance so that exact
/// degeneracies split only by rounding are merged while genuinely distinct
/// values are kept apart.
pub const DEGENERACY_CLUSTER: f64 = 1e-10;

/// Eigenvalues of a bosonic Hamilton matrix below this fraction of the
/// spectral norm violate positive-definiteness.
pub const POSITIVITY: f64 = 1e-12;

/// Unitarity of inputs to the mesh decompositions, Frobenius.
pub const MESH_UNITARITY: f64 = 1e-10;

/// Mesh recomposition error, Frobenius.
pub const MESH_RECOMPOSITION: f64 = 1e-10;

/// Singular values below this are dropped when converting dense gates to
/// MPO form (exact zero structure up to rounding).
pub const GATE_SV_DROP: f64 = 1e-14;

/// Unitarity of dense fermionic gates (exact finite-dimensional check).
pub const GATE_UNITARITY: f64 = 1e-12;
