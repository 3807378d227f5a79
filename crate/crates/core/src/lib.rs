//! Construction of matrix-product-operator representations of thermal states
//! of quadratic (Gaussian) bosonic and fermionic Hamiltonians.
//!
//! The pipeline follows the Gaussian-state preparation scheme: a quadratic
//! Hamiltonian is brought to normal modes by a Bogoliubov transformation, the
//! thermal state of the normal modes is written down as a bond-dimension-1
//! MPO, and the inverse transformation is compiled into a circuit of beam
//! splitters, phase shifters and squeezers via the Bloch-Messiah
//! decomposition and a Reck or Clements mesh. Applying the circuit to the
//! product state yields the thermal state of the interacting modes.
//!
//! An imaginary-time TEBD baseline, a dense Fock-space oracle and an exact
//! floating-point-operation ledger are included for benchmarking.

pub mod bench;
pub mod bloch_messiah;
pub mod chain;
pub mod circuit;
pub mod error;
pub mod fock;
pub mod gates;
pub mod gaussian;
pub mod linalg;
pub mod mpo;
pub mod random;
pub mod tebd;
pub mod tol;

pub use error::{Error, Result};
pub use gaussian::Species;

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
