//! Seeded random matrix generators used by tests and benchmark sweeps.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::linalg::{c64, qr_thin};
use crate::C64;

/// Deterministic RNG for reproducible corpora.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard-complex-Gaussian-ish entries.
pub fn random_complex<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        // Box-Muller keeps the distribution unitarily invariant, which makes
        // the QR trick below produce Haar-distributed unitaries.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (-2.0 * u1.ln()).sqrt();
        c64(r * u2.cos(), r * u2.sin())
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with phase fixing.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = random_complex(n, n, rng);
    let (mut q, r) = qr_thin(&g);
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}

/// Random hermitian matrix of spectral scale ~1.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = random_complex(n, n, rng);
    (&g + g.adjoint()).scale(0.5 / (n as f64).sqrt())
}

/// Random complex symmetric matrix.
pub fn random_symmetric<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = random_complex(n, n, rng);
    (&g + g.transpose()).scale(0.5)
}

/// Random complex antisymmetric matrix.
pub fn random_antisymmetric<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let g = random_complex(n, n, rng);
    (&g - g.transpose()).scale(0.5)
}

/// Random valid Hamilton matrix; the bosonic alpha is shifted to keep the
/// assembled matrix positive-definite.
pub fn random_hamiltonian<R: Rng>(
    species: crate::Species,
    n: usize,
    rng: &mut R,
) -> crate::gaussian::HamiltonMatrix {
    use crate::gaussian::build_hamilton_matrix;
    use crate::linalg::eigh;
    use crate::Species;

    let g = random_complex(n, n, rng);
    let alpha_base = (&g + g.adjoint()).scale(0.25);
    let z = random_complex(n, n, rng);
    let zeta = match species {
        Species::Bosonic => (&z + z.transpose()).scale(0.15),
        Species::Fermionic => (&z - z.transpose()).scale(0.25),
    };
    let alpha = match species {
        Species::Bosonic => {
            let probe =
                build_hamilton_matrix(Species::Bosonic, alpha_base.clone(), zeta.clone()).unwrap();
            let (vals, _) = eigh(&probe.matrix());
            let shift = (-vals[0]).max(0.0) + 0.5;
            &alpha_base + DMatrix::<C64>::identity(n, n).scale(shift)
        }
        Species::Fermionic => alpha_base,
    };
    build_hamilton_matrix(species, alpha, zeta).unwrap()
}

/// Random Bogoliubov matrix built forward from Bloch-Messiah factors:
/// Haar passive layers sandwiching a random squeeze layer (single-mode
/// angles for bosons; adjacent pairs with leftover identity modes for
/// fermions).
pub fn random_bogoliubov<R: Rng>(
    species: crate::Species,
    n: usize,
    rng: &mut R,
) -> nalgebra::DMatrix<C64> {
    use crate::bloch_messiah::{BlochMessiahFactors, FermiSqueezeEntry, SqueezeSpec};
    let u = haar_unitary(n, rng);
    let v = haar_unitary(n, rng);
    let squeeze = match species {
        crate::Species::Bosonic => {
            SqueezeSpec::Bosonic((0..n).map(|_| rng.gen_range(0.1..1.2)).collect())
        }
        crate::Species::Fermionic => {
            let mut entries = Vec::new();
            let mut mode = 0;
            while mode < n {
                if mode + 1 < n && rng.gen_bool(0.6) {
                    entries.push(FermiSqueezeEntry::Pair {
                        mode_a: mode,
                        mode_b: mode + 1,
                        theta: rng.gen_range(0.1..1.4),
                    });
                    mode += 2;
                } else if rng.gen_bool(0.5) {
                    entries.push(FermiSqueezeEntry::Swap { mode });
                    mode += 1;
                } else {
                    entries.push(FermiSqueezeEntry::Identity { mode });
                    mode += 1;
                }
            }
            SqueezeSpec::Fermionic(entries)
        }
    };
    let f = BlochMessiahFactors { species, n_modes: n, u, v, squeeze };
    f.reconstruct()
}
