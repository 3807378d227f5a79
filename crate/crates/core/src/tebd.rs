//! Imaginary-time TEBD baseline: even/odd Suzuki-Trotter splitting of
//! nearest-neighbour Hamiltonians at orders 1, 2 and 4, sharing the MPO
//! compression and fpo-ledger infrastructure with the Gaussian pipeline.

use nalgebra::DMatrix;

use crate::gates::split_pair;
use crate::gaussian::{HamiltonMatrix, Species};
use crate::linalg::{c64, exp_hermitian, hermiticity_defect};
use crate::mpo::{mpo_dot, svd_compress, CompressionConfig, FpoLedger, Mpo};
use crate::{C64, Error, Result};

/// Nearest-neighbour Hamiltonian as dense two-site hermitian generators;
/// term `k` acts on sites `(k, k+1)`.
#[derive(Debug, Clone)]
pub struct LocalHamiltonian {
    pub species: Species,
    pub n_sites: usize,
    pub local_dim: usize,
    pub terms: Vec<DMatrix<C64>>,
}

/// Suzuki-Trotter order and step count.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TrotterConfig {
    pub order: u8,
    pub n_steps: usize,
}

impl TrotterConfig {
    pub fn new(order: u8, n_steps: usize) -> Result<Self> {
        if !matches!(order, 1 | 2 | 4) {
            return Err(Error::InvalidConfig { context: format!("Trotter order {order}") });
        }
        if n_steps == 0 {
            return Err(Error::InvalidConfig { context: "n_steps = 0".into() });
        }
        Ok(TrotterConfig { order, n_steps })
    }
}

/// Sub-step fraction of the fourth-order scheme: `1 / (4 - 4^(1/3))`.
pub fn fourth_order_fraction() -> f64 {
    1.0 / (4.0 - 4.0f64.powf(1.0 / 3.0))
}

fn annihilation(species: Species, d: usize) -> DMatrix<C64> {
    crate::linalg::to_nalgebra(&crate::mpo::annihilation_matrix(species, d))
}

/// Dense two-site operator for the ordered quadratic `first . second`, each
/// factor a creation/annihilation operator on relative site 0 or 1 of the
/// pair. Fermionic cross-site products carry their Jordan-Wigner signs;
/// bosonic same-site products are evaluated exactly (transient intermediate
/// kept, see the moment-measurement convention).
fn adjacent_quadratic(
    species: Species,
    d: usize,
    first: (usize, bool),
    second: (usize, bool),
) -> DMatrix<C64> {
    let a = annihilation(species, d);
    let pick = |create: bool| if create { a.adjoint() } else { a.clone() };
    let eye = DMatrix::<C64>::identity(d, d);
    let (s1, c1) = first;
    let (s2, c2) = second;
    if s1 == s2 {
        let local = match species {
            Species::Bosonic => {
                let big = annihilation(Species::Bosonic, d + 1);
                let pick_big = |create: bool| if create { big.adjoint() } else { big.clone() };
                let prod = pick_big(c1) * pick_big(c2);
                DMatrix::from_fn(d, d, |i, j| prod[(i, j)])
            }
            Species::Fermionic => pick(c1) * pick(c2),
        };
        if s1 == 0 {
            local.kronecker(&eye)
        } else {
            eye.kronecker(&local)
        }
    } else {
        let (m1, m2) = (pick(c1), pick(c2));
        match species {
            Species::Bosonic => {
                if s1 == 0 {
                    m1.kronecker(&m2)
                } else {
                    m2.kronecker(&m1)
                }
            }
            Species::Fermionic => {
                // Strings below the pair cancel; the residual Z lands on
                // site 0 of the pair (right of the first factor when it sits
                // on site 0, left of the second when the first sits on 1).
                let z = DMatrix::from_fn(2, 2, |i, j| {
                    if i != j {
                        c64(0.0, 0.0)
                    } else if i == 0 {
                        c64(1.0, 0.0)
                    } else {
                        c64(-1.0, 0.0)
                    }
                });
                if s1 == 0 {
                    (m1 * &z).kronecker(&m2)
                } else {
                    (&z * m2).kronecker(&m1)
                }
            }
        }
    }
}

impl LocalHamiltonian {
    /// Split a nearest-neighbour quadratic Hamiltonian into two-site terms.
    ///
    /// On-site contributions `alpha_kk (a^dag a + nu a a^dag)` are shared
    /// half-and-half between the adjacent bonds (boundary sites assign their
    /// full share to their only bond), so the sum of terms reproduces the
    /// assembled Hamiltonian, constants included.
    pub fn from_hamilton_matrix(h: &HamiltonMatrix, local_dim: usize) -> Result<Self> {
        let n = h.n_modes();
        let species = h.species();
        let d = match species {
            Species::Bosonic => local_dim,
            Species::Fermionic => 2,
        };
        if n < 2 {
            return Err(Error::InvalidConfig {
                context: "TEBD needs at least two sites".into(),
            });
        }
        let alpha = h.alpha();
        let zeta = h.zeta();
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > 1
                    && (alpha[(i, j)].norm() > 1e-14 || zeta[(i, j)].norm() > 1e-14)
                {
                    return Err(Error::InvalidConfig {
                        context: format!("Hamiltonian couples non-adjacent sites {i},{j}"),
                    });
                }
            }
        }
        let nu = c64(species.nu(), 0.0);
        // On-site operator alpha_kk (a^dag a + nu a a^dag) as an exact
        // single-site matrix, embedded on one slot of the pair.
        let onsite = |site_rel: usize, weight: C64| -> DMatrix<C64> {
            adjacent_quadratic(species, d, (site_rel, true), (site_rel, false)).scale(1.0)
                * weight
                + adjacent_quadratic(species, d, (site_rel, false), (site_rel, true)) * (nu * weight)
        };
        let mut terms = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let mut t = DMatrix::<C64>::zeros(d * d, d * d);
            // Hopping and pairing on the bond, from the general quadratic
            // form: alpha_ij a_i^dag a_j + nu alpha_ij^* a_i a_j^dag
            //     + zeta_ij a_i a_j + nu zeta_ij^* a_i^dag a_j^dag.
            for (i, j) in [(k, k + 1), (k + 1, k)] {
                let (ri, rj) = (i - k, j - k);
                let al = alpha[(i, j)];
                if al.norm() > 0.0 {
                    t += adjacent_quadratic(species, d, (ri, true), (rj, false)) * al;
                    t += adjacent_quadratic(species, d, (ri, false), (rj, true)) * (nu * al.conj());
                }
                let ze = zeta[(i, j)];
                if ze.norm() > 0.0 {
                    t += adjacent_quadratic(species, d, (ri, false), (rj, false)) * ze;
                    t += adjacent_quadratic(species, d, (ri, true), (rj, true)) * (nu * ze.conj());
                }
            }
            let w_left = if k == 0 { 1.0 } else { 0.5 };
            let w_right = if k + 1 == n - 1 { 1.0 } else { 0.5 };
            t += onsite(0, alpha[(k, k)] * c64(w_left, 0.0));
            t += onsite(1, alpha[(k + 1, k + 1)] * c64(w_right, 0.0));
            let defect = hermiticity_defect(&t);
            if defect > 1e-12 {
                return Err(Error::DecompositionDefect { relation: "local term hermiticity", defect });
            }
            terms.push(crate::linalg::hermitize(&t));
        }
        Ok(LocalHamiltonian { species, n_sites: n, local_dim: d, terms })
    }

    /// Dense assembly of the summed terms (test oracle for small N).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.local_dim;
        let dim = d.pow(self.n_sites as u32);
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for (k, t) in self.terms.iter().enumerate() {
            let left = d.pow(k as u32);
            let right = d.pow((self.n_sites - k - 2) as u32);
            let eye_l = DMatrix::<C64>::identity(left, left);
            let eye_r = DMatrix::<C64>::identity(right, right);
            out += eye_l.kronecker(t).kronecker(&eye_r);
        }
        out
    }
}

/// Even or odd sub-lattice of bond terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One factor of a Suzuki-Trotter propagator.
#[derive(Debug, Clone)]
pub struct TrotterLayer {
    pub parity: Parity,
    pub tau: f64,
    pub mpo: Mpo,
}

/// MPO of `prod_{k = parity (mod 2)} exp(-tau h_k)`; disjoint bonds make
/// the product exact.
pub fn layer_mpo(h: &LocalHamiltonian, parity: Parity, tau: f64) -> Mpo {
    let d = h.local_dim;
    let start = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let identity_site = || {
        ndarray::Array4::from_shape_fn((1, d, d, 1), |(_, k, b, _)| {
            if k == b {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    };
    let mut tensors = vec![identity_site(); h.n_sites];
    let mut covered = vec![false; h.n_sites];
    let mut k = start;
    while k + 1 < h.n_sites {
        let gate = exp_hermitian(&h.terms[k], c64(-tau, 0.0));
        let (left, right) = split_pair(&gate, d);
        tensors[k] = left;
        tensors[k + 1] = right;
        covered[k] = true;
        covered[k + 1] = true;
        k += 2;
    }
    Mpo::from_tensors(tensors).expect("layer tensors consistent")
}

/// Layer sequence of the order-`order` propagator `U_order(tau)`, in
/// operator-product order (the product of the listed MPOs left to right).
///
/// Order 1: `E(tau) O(tau)`. Order 2: `E(tau/2) O(tau) E(tau/2)`. Order 4:
/// five order-2 blocks at sub-steps `tau1, tau1, tau2, tau1, tau1` with
/// `tau1 = tau / (4 - 4^(1/3))` and `tau2 = tau - 4 tau1`.
pub fn trotter_layers(h: &LocalHamiltonian, order: u8, tau: f64) -> Result<Vec<TrotterLayer>> {
    let mk = |parity, t| TrotterLayer { parity, tau: t, mpo: layer_mpo(h, parity, t) };
    match order {
        1 => Ok(vec![mk(Parity::Even, tau), mk(Parity::Odd, tau)]),
        2 => Ok(vec![
            mk(Parity::Even, tau / 2.0),
            mk(Parity::Odd, tau),
            mk(Parity::Even, tau / 2.0),
        ]),
        4 => {
            let tau1 = tau * fourth_order_fraction();
            let tau2 = tau - 4.0 * tau1;
            let mut out = Vec::with_capacity(15);
            for t in [tau1, tau1, tau2, tau1, tau1] {
                out.push(mk(Parity::Even, t / 2.0));
                out.push(mk(Parity::Odd, t));
                out.push(mk(Parity::Even, t / 2.0));
            }
            Ok(out)
        }
        _ => Err(Error::InvalidConfig { context: format!("Trotter order {order}") }),
    }
}

/// Imaginary-time evolution `rho(beta) ~ U rho0 U` with
/// `U = U_order(delta/2)^n`, `delta = beta / n_steps`, sandwiching each
/// hermitian layer from both sides and compressing after each MPO-MPO
/// product. The result is normalized to unit trace.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    rho0: &Mpo,
    h: &LocalHamiltonian,
    beta: f64,
    cfg: &TrotterConfig,
    comp: &CompressionConfig,
    gate_comp: Option<&CompressionConfig>,
    ledger: &mut FpoLedger,
    mut bond_probe: Option<&mut dyn FnMut(usize, &Mpo)>,
) -> Result<Mpo> {
    if beta == 0.0 {
        return Ok(rho0.clone());
    }
    let delta = beta / cfg.n_steps as f64;
    // Half-step per side: each step applies exp(-delta H) in total.
    let mut layers = trotter_layers(h, cfg.order, delta / 2.0)?;
    if let Some(gc) = gate_comp {
        // Gate compression is construction cost, excluded from the ledger.
        let mut scratch = FpoLedger::new();
        for layer in layers.iter_mut() {
            let (compressed, _) = svd_compress(&layer.mpo, gc, &mut scratch);
            layer.mpo = compressed;
        }
    }
    let mut rho = rho0.clone();
    let mut op_index = 0usize;
    for _ in 0..cfg.n_steps {
        for layer in layers.iter().rev() {
            rho = mpo_dot(&layer.mpo, &rho, ledger)?;
            let (c, _) = svd_compress(&rho, comp, ledger);
            rho = c;
            if let Some(probe) = bond_probe.as_deref_mut() {
                probe(op_index, &rho);
            }
            op_index += 1;
            rho = mpo_dot(&rho, &layer.mpo, ledger)?;
            let (c, _) = svd_compress(&rho, comp, ledger);
            rho = c;
            if let Some(probe) = bond_probe.as_deref_mut() {
                probe(op_index, &rho);
            }
            op_index += 1;
        }
    }
    rho.normalize()
}
