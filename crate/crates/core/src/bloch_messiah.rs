//! Bloch-Messiah factorization of Bogoliubov matrices.
//!
//! Splits an active transformation `T = U_bar S_bar V_bar^dag` into two
//! passive (block-diagonal) factors sandwiching a local squeeze layer. For
//! bosons the squeeze layer is a tensor product of single-mode squeezers
//! parameterized by `theta_k`; for fermions it distinguishes identity modes,
//! adjacent two-mode squeeze pairs and swap modes.
//!
//! The construction runs on the singular value decomposition of the gamma
//! block. Degenerate singular values are handled by a structured rotation of
//! the cluster: `X = U^dag mu V*` restricted to a cluster is symmetric
//! (bosons) or antisymmetric (fermions) and proportional to a unitary, so a
//! Takagi or Kramers factorization aligns the bases without disturbing gamma.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::gaussian::{NormalModeDecomposition, Species};
use crate::linalg::{
    c64, frobenius, kramers_pairs_unitary_antisymmetric, svd, takagi_unitary_symmetric,
};
use crate::{tol, C64, Error, Result};

/// One entry of the fermionic squeeze layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FermiSqueezeEntry {
    /// Mode passes through unchanged.
    Identity { mode: usize },
    /// Mode is particle-hole swapped by `x = f + f^dag`.
    Swap { mode: usize },
    /// Two adjacent modes carry a two-mode squeeze of angle `theta`.
    Pair { mode_a: usize, mode_b: usize, theta: f64 },
}

/// Species-dependent squeeze parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SqueezeSpec {
    /// Single-mode squeeze angle per mode.
    Bosonic(Vec<f64>),
    /// Every mode appears in exactly one entry.
    Fermionic(Vec<FermiSqueezeEntry>),
}

/// The factors of `T = U_bar S_bar V_bar^dag`.
#[derive(Debug, Clone)]
pub struct BlochMessiahFactors {
    pub species: Species,
    pub n_modes: usize,
    /// Unitary `U` of the outgoing passive layer (`U_bar = U (+) U*`).
    pub u: DMatrix<C64>,
    /// Unitary `V` of the incoming passive layer (`V_bar = V (+) V*`).
    pub v: DMatrix<C64>,
    pub squeeze: SqueezeSpec,
}

impl BlochMessiahFactors {
    /// True when the squeeze layer is trivial (all angles zero / all modes
    /// identity).
    pub fn is_passive(&self) -> bool {
        match &self.squeeze {
            SqueezeSpec::Bosonic(thetas) => thetas.iter().all(|&t| t == 0.0),
            SqueezeSpec::Fermionic(entries) => entries
                .iter()
                .all(|e| matches!(e, FermiSqueezeEntry::Identity { .. })),
        }
    }

    /// Assemble the squeeze matrix `S_bar` in the doubled ladder basis.
    pub fn squeeze_matrix(&self) -> DMatrix<C64> {
        let n = self.n_modes;
        let mut s = DMatrix::<C64>::zeros(2 * n, 2 * n);
        match &self.squeeze {
            SqueezeSpec::Bosonic(thetas) => {
                for (k, &th) in thetas.iter().enumerate() {
                    s[(k, k)] = c64(th.cosh(), 0.0);
                    s[(k, n + k)] = c64(th.sinh(), 0.0);
                    s[(n + k, k)] = c64(th.sinh(), 0.0);
                    s[(n + k, n + k)] = c64(th.cosh(), 0.0);
                }
            }
            SqueezeSpec::Fermionic(entries) => {
                for e in entries {
                    match *e {
                        FermiSqueezeEntry::Identity { mode } => {
                            s[(mode, mode)] = c64(1.0, 0.0);
                            s[(n + mode, n + mode)] = c64(1.0, 0.0);
                        }
                        FermiSqueezeEntry::Swap { mode } => {
                            s[(mode, n + mode)] = c64(1.0, 0.0);
                            s[(n + mode, mode)] = c64(1.0, 0.0);
                        }
                        FermiSqueezeEntry::Pair { mode_a: a, mode_b: b, theta } => {
                            // gamma block diag(cos, cos), mu block [[0, -sin], [sin, 0]].
                            let (c, m) = (theta.cos(), theta.sin());
                            s[(a, a)] = c64(c, 0.0);
                            s[(b, b)] = c64(c, 0.0);
                            s[(a, n + b)] = c64(-m, 0.0);
                            s[(b, n + a)] = c64(m, 0.0);
                            s[(n + a, b)] = c64(-m, 0.0);
                            s[(n + b, a)] = c64(m, 0.0);
                            s[(n + a, n + a)] = c64(c, 0.0);
                            s[(n + b, n + b)] = c64(c, 0.0);
                        }
                    }
                }
            }
        }
        s
    }

    /// Reassemble `U_bar S_bar V_bar^dag`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let ubar = passive_doubled(&self.u);
        let vbar = passive_doubled(&self.v);
        ubar * self.squeeze_matrix() * vbar.adjoint()
    }
}

/// Embed an `N x N` unitary as the passive doubled matrix `W (+) W*`.
pub fn passive_doubled(w: &DMatrix<C64>) -> DMatrix<C64> {
    let n = w.nrows();
    let mut out = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = w[(i, j)];
            out[(n + i, n + j)] = w[(i, j)].conj();
        }
    }
    out
}

/// Group indices of a descending value list into clusters of (numerically)
/// equal values.
fn clusters(values: &[f64], tol_abs: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end] - values[end - 1]).abs() <= tol_abs {
            end += 1;
        }
        out.push((start, end));
        start = end;
    }
    out
}

/// Bloch-Messiah factorization of the Bogoliubov matrix in `nmd`.
pub fn bloch_messiah(nmd: &NormalModeDecomposition) -> Result<BlochMessiahFactors> {
    let n = nmd.n_modes;
    let gamma = nmd.gamma_block();
    let mu = nmd.mu_block();
    let scale = frobenius(&nmd.t).max(1.0);

    // Fully passive input: gamma is already unitary; no SVD needed (and the
    // maximally degenerate singular values would make it non-deterministic).
    if frobenius(&mu) <= tol::BOGOLIUBOV_BLOCK * scale {
        let squeeze = match nmd.species {
            Species::Bosonic => SqueezeSpec::Bosonic(vec![0.0; n]),
            Species::Fermionic => SqueezeSpec::Fermionic(
                (0..n).map(|mode| FermiSqueezeEntry::Identity { mode }).collect(),
            ),
        };
        let factors = BlochMessiahFactors {
            species: nmd.species,
            n_modes: n,
            u: gamma,
            v: DMatrix::identity(n, n),
            squeeze,
        };
        verify_reconstruction(&factors, nmd)?;
        return Ok(factors);
    }

    let (mut u, c, mut v) = svd(&gamma);
    // X = U^dag mu V*; block-diagonal over clusters of equal c for any valid
    // Bogoliubov input.
    let x = u.adjoint() * &mu * v.map(|z| z.conj());

    let cvals: Vec<f64> = (0..n).map(|i| c[i]).collect();
    let cluster_tol = tol::DEGENERACY_CLUSTER * cvals[0].max(1.0);

    let factors = match nmd.species {
        Species::Bosonic => {
            let mut thetas = vec![0.0; n];
            for (start, end) in clusters(&cvals, cluster_tol) {
                let m = end - start;
                let block = x.view((start, start), (m, m)).into_owned();
                let s_block = (block.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64).sqrt();
                if s_block <= tol::FERMI_BLOCK_CLASSIFY {
                    continue; // passive cluster, theta stays 0
                }
                if m == 1 {
                    let z = block[(0, 0)];
                    let half = c64(0.0, z.arg() / 2.0).exp();
                    rotate_column_phase(&mut u, &mut v, start, half);
                    thetas[start] = z.norm().asinh();
                } else {
                    // Within an exactly degenerate cluster X is s * (unitary
                    // symmetric); Takagi aligns U and V simultaneously.
                    let sym = (&block + block.transpose()).scale(0.5);
                    let y = sym.scale(1.0 / s_block);
                    let w = takagi_unitary_symmetric(&y);
                    rotate_cluster(&mut u, start, &w);
                    rotate_cluster(&mut v, start, &w);
                    for th in thetas[start..end].iter_mut() {
                        *th = s_block.asinh();
                    }
                }
                for k in start..end {
                    let consistency = (cvals[k].powi(2) - (1.0 + thetas[k].sinh().powi(2))).abs();
                    if consistency > tol::SQUEEZE_CONSISTENCY {
                        return Err(Error::SqueezeInconsistent { defect: consistency });
                    }
                }
            }
            BlochMessiahFactors {
                species: nmd.species,
                n_modes: n,
                u,
                v,
                squeeze: SqueezeSpec::Bosonic(thetas),
            }
        }
        Species::Fermionic => {
            let mut entries: Vec<FermiSqueezeEntry> = Vec::with_capacity(n);
            for (start, end) in clusters(&cvals, cluster_tol) {
                let m = end - start;
                let c_val = cvals[start];
                let block = x.view((start, start), (m, m)).into_owned();
                let s_block = (block.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64).sqrt();
                if s_block <= tol::FERMI_BLOCK_CLASSIFY {
                    // mu singular value 0: blocked identity modes.
                    for k in start..end {
                        entries.push(FermiSqueezeEntry::Identity { mode: k });
                    }
                    continue;
                }
                if c_val <= tol::FERMI_BLOCK_CLASSIFY {
                    // gamma singular value 0: blocked swap modes. U rotates
                    // independently of V since the gamma block vanishes.
                    let defect = crate::linalg::unitarity_defect(&block);
                    if defect > tol::SQUEEZE_CONSISTENCY {
                        return Err(Error::SqueezeInconsistent { defect });
                    }
                    rotate_cluster(&mut u, start, &block);
                    for k in start..end {
                        entries.push(FermiSqueezeEntry::Swap { mode: k });
                    }
                    continue;
                }
                // Paired modes: X restricted is s * (unitary antisymmetric).
                let anti = (&block - block.transpose()).scale(0.5);
                let s_val = (anti.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64).sqrt();
                let consistency = (c_val.powi(2) + s_val.powi(2) - 1.0).abs();
                if consistency > tol::SQUEEZE_CONSISTENCY {
                    return Err(Error::SqueezeInconsistent { defect: consistency });
                }
                let y = anti.scale(1.0 / s_val);
                let w = kramers_pairs_unitary_antisymmetric(&y)?;
                rotate_cluster(&mut u, start, &w);
                rotate_cluster(&mut v, start, &w);
                let theta = s_val.atan2(c_val);
                for pair in 0..m / 2 {
                    let a = start + 2 * pair;
                    entries.push(FermiSqueezeEntry::Pair { mode_a: a, mode_b: a + 1, theta });
                }
            }
            entries.sort_by_key(|e| match *e {
                FermiSqueezeEntry::Identity { mode } => mode,
                FermiSqueezeEntry::Swap { mode } => mode,
                FermiSqueezeEntry::Pair { mode_a, .. } => mode_a,
            });
            BlochMessiahFactors {
                species: nmd.species,
                n_modes: n,
                u,
                v,
                squeeze: SqueezeSpec::Fermionic(entries),
            }
        }
    };
    verify_reconstruction(&factors, nmd)?;
    Ok(factors)
}

/// Right-multiply the columns `start..start+w.ncols()` of `m` by `w`.
fn rotate_cluster(m: &mut DMatrix<C64>, start: usize, w: &DMatrix<C64>) {
    let k = w.nrows();
    let block = m.columns(start, k).into_owned();
    let rotated = block * w;
    m.columns_mut(start, k).copy_from(&rotated);
}

/// Multiply one column of both factors by the same phase.
fn rotate_column_phase(u: &mut DMatrix<C64>, v: &mut DMatrix<C64>, col: usize, half: C64) {
    for i in 0..u.nrows() {
        u[(i, col)] *= half;
        v[(i, col)] *= half;
    }
}

fn verify_reconstruction(
    factors: &BlochMessiahFactors,
    nmd: &NormalModeDecomposition,
) -> Result<()> {
    let recon = factors.reconstruct();
    let defect = frobenius(&(&recon - &nmd.t));
    if defect > tol::BLOCH_MESSIAH_RECONSTRUCTION * frobenius(&nmd.t).max(1.0) {
        return Err(Error::DecompositionDefect {
            relation: "Bloch-Messiah reconstruction",
            defect,
        });
    }
    Ok(())
}


/// Forward constructors for Bogoliubov matrices with known factors; test
/// support for this module and for the circuit synthesizer.
#[cfg(test)]
pub(crate) mod forward {
    use super::*;

    pub fn bosonic_bogoliubov(
        u: &DMatrix<C64>,
        thetas: &[f64],
        v: &DMatrix<C64>,
    ) -> DMatrix<C64> {
        let n = u.nrows();
        let f = BlochMessiahFactors {
            species: Species::Bosonic,
            n_modes: n,
            u: u.clone(),
            v: v.clone(),
            squeeze: SqueezeSpec::Bosonic(thetas.to_vec()),
        };
        f.reconstruct()
    }

    pub fn fermionic_bogoliubov(
        u: &DMatrix<C64>,
        entries: &[FermiSqueezeEntry],
        v: &DMatrix<C64>,
    ) -> DMatrix<C64> {
        let n = u.nrows();
        let f = BlochMessiahFactors {
            species: Species::Fermionic,
            n_modes: n,
            u: u.clone(),
            v: v.clone(),
            squeeze: SqueezeSpec::Fermionic(entries.to_vec()),
        };
        f.reconstruct()
    }
}
