//! MPO representations of circuit gates and of the normal-mode thermal
//! product state.
//!
//! Bosonic gates are dense matrix exponentials of the generator projected to
//! the `M`-truncated Fock space; fermionic gates are exact 4x4 / 2x2
//! exponentials of the Jordan-Wigner images (strings cancel for quadratic
//! adjacent-site generators). The blocked-mode swap `x = f + f^dag` keeps
//! its Jordan-Wigner string: a string operator is a product of single-site
//! matrices, hence an exact bond-dimension-1 MPO.

use nalgebra::DMatrix;
use ndarray::Array4;

use crate::circuit::{GateKind, GateSpec};
use crate::gaussian::{shifted_frequencies, NormalModeDecomposition, Species, ThermalSpec};
use crate::linalg::{c64, exp_hermitian, to_nalgebra, unitarity_defect};
use crate::mpo::{annihilation_matrix, Mpo};
use crate::{tol, C64, Error, Result};

/// How faithfully the MPO represents the ideal gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    /// Exponential of the generator projected to local dimension `M`.
    Truncated(usize),
}

/// A gate in MPO form over the full chain, with its provenance.
#[derive(Debug, Clone)]
pub struct GateMpo {
    pub mpo: Mpo,
    pub provenance: GateSpec,
    pub exactness: Exactness,
}

/// Thermal product state of the normal modes: bond dimension 1 everywhere,
/// site `i` diagonal with entries `exp(-2 beta d_i n) / Z_i` for `n < M`.
/// Fermions force `M = 2`.
pub fn thermal_product_mpo(
    nmd: &NormalModeDecomposition,
    spec: &ThermalSpec,
    m_local: usize,
) -> Result<Mpo> {
    if m_local == 0 {
        return Err(Error::InvalidConfig { context: "local dimension must be >= 1".into() });
    }
    let m_local = match nmd.species {
        Species::Bosonic => m_local,
        Species::Fermionic => 2,
    };
    let freqs = shifted_frequencies(nmd, spec);
    let site_diagonals: Vec<Vec<f64>> = (0..nmd.n_modes)
        .map(|i| {
            // Shifted exponentials keep the normalization finite for any
            // sign of the (mu-shifted) frequency and any beta.
            let exps: Vec<f64> =
                (0..m_local).map(|n| -2.0 * spec.beta * freqs[i] * n as f64).collect();
            let emax = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = exps.iter().map(|e| (e - emax).exp()).collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / z).collect()
        })
        .collect();
    Ok(Mpo::product_diagonal(&site_diagonals))
}

/// Dense matrix of a gate on its own sites (`M x M` for one site, `M^2 x
/// M^2` for a pair, site-0-major index order). The swap gate's string part
/// is not included here; see [`gate_mpo`].
pub fn dense_gate(kind: &GateKind, species: Species, m_local: usize) -> Result<DMatrix<C64>> {
    let d = local_dim(species, m_local);
    let a = to_nalgebra(&annihilation_matrix(species, d));
    let ad = a.adjoint();
    match *kind {
        GateKind::PhaseShifter { phi } => {
            let h = &ad * &a;
            Ok(exp_hermitian(&h, c64(0.0, phi)))
        }
        GateKind::BeamSplitter { theta, phi } => {
            // Element = P(phi) on the first site, then B(theta).
            let h = kron(&ad, &a) + kron(&a, &ad);
            let b = exp_hermitian(&h, c64(0.0, theta));
            let n_op = kron(&(&ad * &a), &DMatrix::identity(d, d));
            let p = exp_hermitian(&n_op, c64(0.0, phi));
            Ok(p * b)
        }
        GateKind::SqueezeSingle { z } => {
            if species != Species::Bosonic {
                return Err(Error::InvalidGateKind {
                    kind: "squeeze_single".into(),
                    species: species.to_string(),
                });
            }
            // exp(z/2 (a^2 - a^dag^2)) = exp(i h) with h = -i z/2 (a^2 - a^dag^2).
            let gen = (&a * &a - &ad * &ad).scale(0.5 * z);
            let h = gen.map(|x| c64(x.im, -x.re)); // -i * gen
            Ok(exp_hermitian(&h, c64(0.0, 1.0)))
        }
        GateKind::SqueezePair { theta } => {
            if species != Species::Fermionic {
                return Err(Error::InvalidGateKind {
                    kind: "squeeze_pair".into(),
                    species: species.to_string(),
                });
            }
            // exp(theta (f_i^dag f_j^dag + f_i f_j)); Jordan-Wigner image
            // sigma^+ sigma^+ - sigma^- sigma^- on adjacent sites.
            let gen = (kron(&ad, &ad) - kron(&a, &a)).scale(theta);
            let h = gen.map(|x| c64(x.im, -x.re));
            Ok(exp_hermitian(&h, c64(0.0, 1.0)))
        }
        GateKind::SwapMode => {
            if species != Species::Fermionic {
                return Err(Error::InvalidGateKind {
                    kind: "swap_mode".into(),
                    species: species.to_string(),
                });
            }
            // Local part sigma^x; hermitian and unitary.
            Ok(&a + &ad)
        }
        GateKind::IdentityMode => Ok(DMatrix::identity(d, d)),
    }
}

fn local_dim(species: Species, m_local: usize) -> usize {
    match species {
        Species::Bosonic => m_local,
        Species::Fermionic => 2,
    }
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Build the full-chain MPO of one gate.
///
/// Two-site gates are split by an SVD across the pair with singular values
/// below the drop threshold removed (construction cost is not charged to the
/// ledger). Fermionic gates are checked unitary exactly.
pub fn gate_mpo(
    spec: &GateSpec,
    species: Species,
    n_sites: usize,
    m_local: usize,
) -> Result<GateMpo> {
    for &s in &spec.sites {
        if s >= n_sites {
            return Err(Error::ShapeMismatch {
                context: format!("gate site {s} out of range for {n_sites} sites"),
            });
        }
    }
    if spec.sites.len() == 2 && spec.sites[1] != spec.sites[0] + 1 {
        return Err(Error::NonAdjacentSites { sites: spec.sites.clone() });
    }
    let d = local_dim(species, m_local);
    let dense = dense_gate(&spec.kind, species, m_local)?;
    if species == Species::Fermionic {
        let defect = unitarity_defect(&dense);
        if defect > tol::GATE_UNITARITY {
            return Err(Error::NotUnitary { defect });
        }
    }

    let mut tensors: Vec<Array4<C64>> = Vec::with_capacity(n_sites);
    let identity_site = |dd: usize| {
        Array4::from_shape_fn((1, dd, dd, 1), |(_, k, b, _)| {
            if k == b {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    };

    match spec.sites.len() {
        1 => {
            let site = spec.sites[0];
            for l in 0..n_sites {
                if l == site {
                    tensors.push(single_site_tensor(&dense, d));
                } else if spec.kind == GateKind::SwapMode && l < site {
                    // Jordan-Wigner string: Z on every preceding site.
                    let z = DMatrix::from_fn(2, 2, |i, j| {
                        if i != j {
                            c64(0.0, 0.0)
                        } else if i == 0 {
                            c64(1.0, 0.0)
                        } else {
                            c64(-1.0, 0.0)
                        }
                    });
                    tensors.push(single_site_tensor(&z, d));
                } else {
                    tensors.push(identity_site(d));
                }
            }
        }
        2 => {
            let (left, right) = split_pair(&dense, d);
            for l in 0..n_sites {
                if l == spec.sites[0] {
                    tensors.push(left.clone());
                } else if l == spec.sites[1] {
                    tensors.push(right.clone());
                } else {
                    tensors.push(identity_site(d));
                }
            }
        }
        _ => {
            return Err(Error::ShapeMismatch {
                context: format!("gate with {} sites", spec.sites.len()),
            })
        }
    }
    let mpo = Mpo::from_tensors(tensors)?;
    let exactness = match (species, &spec.kind) {
        (Species::Fermionic, _) => Exactness::Exact,
        (Species::Bosonic, GateKind::PhaseShifter { .. }) => Exactness::Exact,
        (Species::Bosonic, GateKind::IdentityMode) => Exactness::Exact,
        (Species::Bosonic, _) => Exactness::Truncated(m_local),
    };
    Ok(GateMpo { mpo, provenance: spec.clone(), exactness })
}

fn single_site_tensor(m: &DMatrix<C64>, d: usize) -> Array4<C64> {
    Array4::from_shape_fn((1, d, d, 1), |(_, k, b, _)| m[(k, b)])
}

/// SVD split of a two-site dense gate into a pair of MPO tensors; singular
/// values below the drop threshold are removed without ledger accounting.
pub(crate) fn split_pair(g: &DMatrix<C64>, d: usize) -> (Array4<C64>, Array4<C64>) {
    // g[(k1 d + k2), (b1 d + b2)] -> m[(k1 b1), (k2 b2)].
    let mut m = DMatrix::<C64>::zeros(d * d, d * d);
    for k1 in 0..d {
        for k2 in 0..d {
            for b1 in 0..d {
                for b2 in 0..d {
                    m[(k1 * d + b1, k2 * d + b2)] = g[(k1 * d + k2, b1 * d + b2)];
                }
            }
        }
    }
    let (u, s, v) = crate::linalg::svd(&m);
    let keep = s.iter().take_while(|&&x| x > tol::GATE_SV_DROP).count().max(1);
    let mut left = Array4::zeros((1, d, d, keep));
    let mut right = Array4::zeros((keep, d, d, 1));
    for r in 0..keep {
        let w = s[r].sqrt();
        for k in 0..d {
            for b in 0..d {
                left[[0, k, b, r]] = u[(k * d + b, r)] * w;
                right[[r, k, b, 0]] = v[(k * d + b, r)].conj() * w;
            }
        }
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{build_hamilton_matrix, normal_mode_decompose};
    use crate::linalg::frobenius;
    use nalgebra::DMatrix;

    fn spec_two(kind: GateKind, bond: usize) -> GateSpec {
        GateSpec { kind, sites: vec![bond, bond + 1], layer: 0 }
    }

    fn spec_one(kind: GateKind, site: usize) -> GateSpec {
        GateSpec { kind, sites: vec![site], layer: 0 }
    }

    fn mpo_dense_vs_gate(gate: &GateMpo) -> ndarray::Array2<C64> {
        gate.mpo.to_dense()
    }

    #[test]
    fn thermal_product_is_normalized_per_site() {
        let alpha = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c64(1.0 + i as f64, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        let h = build_hamilton_matrix(Species::Bosonic, alpha, DMatrix::zeros(2, 2)).unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let spec = ThermalSpec::new(0.5).unwrap();
        let rho = thermal_product_mpo(&nmd, &spec, 32).unwrap();
        assert!((rho.trace() - c64(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(rho.max_bond(), 1);
        // <n> on site 0 equals the geometric-series value at d = 1.
        let mom = crate::mpo::measure_moments(&rho, Species::Bosonic).unwrap();
        let expect = 1.0 / (1.0f64.exp() - 1.0);
        assert!((mom.gamma[(0, 0)].re - expect).abs() < 1e-10);
    }

    #[test]
    fn zero_temperature_limit_is_vacuum_projector() {
        let alpha = DMatrix::from_element(1, 1, c64(0.7, 0.0));
        let h = build_hamilton_matrix(Species::Bosonic, alpha, DMatrix::zeros(1, 1)).unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let spec = ThermalSpec::new(1e6).unwrap();
        let rho = thermal_product_mpo(&nmd, &spec, 8).unwrap();
        let dense = rho.to_dense();
        assert!((dense[[0, 0]].re - 1.0).abs() < 1e-12);
        for k in 1..8 {
            assert!(dense[[k, k]].norm() < 1e-12);
        }
    }

    #[test]
    fn fermionic_thermal_site_population() {
        let alpha = DMatrix::from_element(1, 1, c64(1.0, 0.0));
        let h = build_hamilton_matrix(Species::Fermionic, alpha, DMatrix::zeros(1, 1)).unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let spec = ThermalSpec::new(0.5).unwrap();
        let rho = thermal_product_mpo(&nmd, &spec, 7).unwrap(); // M forced to 2
        let dense = rho.to_dense();
        let expect = (-1.0f64).exp() / (1.0 + (-1.0f64).exp());
        assert!((dense[[1, 1]].re - expect).abs() < 1e-12);
        assert_eq!(dense.nrows(), 2);
    }

    #[test]
    fn beam_splitter_theta_zero_is_identity() {
        let g = gate_mpo(
            &spec_two(GateKind::BeamSplitter { theta: 0.0, phi: 0.0 }, 0),
            Species::Bosonic,
            2,
            3,
        )
        .unwrap();
        let dense = mpo_dense_vs_gate(&g);
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dense[[i, j]] - c64(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn beam_splitter_half_pi_exchanges_single_photon() {
        // theta = pi/2 sends |1, 0> to i |0, 1>.
        let g = gate_mpo(
            &spec_two(GateKind::BeamSplitter { theta: std::f64::consts::FRAC_PI_2, phi: 0.0 }, 0),
            Species::Bosonic,
            2,
            2,
        )
        .unwrap();
        let dense = mpo_dense_vs_gate(&g);
        // |1,0> has index 1*2 + 0 = 2; |0,1> index 1.
        assert!((dense[[1, 2]] - c64(0.0, 1.0)).norm() < 1e-12);
        assert!(dense[[2, 2]].norm() < 1e-12);
    }

    #[test]
    fn bosonic_beam_splitter_conserves_excitation() {
        let g = dense_gate(
            &GateKind::BeamSplitter { theta: 0.7, phi: 0.3 },
            Species::Bosonic,
            4,
        )
        .unwrap();
        for k1 in 0..4usize {
            for k2 in 0..4usize {
                for b1 in 0..4usize {
                    for b2 in 0..4usize {
                        if k1 + k2 != b1 + b2 {
                            let z = g[(k1 * 4 + k2, b1 * 4 + b2)];
                            assert!(z.norm() < 1e-13, "block mixing at {k1}{k2},{b1}{b2}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn squeezer_vacuum_occupation_matches_sinh_sq() {
        // z = 0.5 at M = 40: <n> = sinh^2(0.5).
        let n_sites = 1;
        let m_local = 40;
        let g = gate_mpo(
            &spec_one(GateKind::SqueezeSingle { z: 0.5 }, 0),
            Species::Bosonic,
            n_sites,
            m_local,
        )
        .unwrap();
        // rho = S |0><0| S^dag reached via G^dag rho G with G = S^dag...
        // measure directly on the dense state instead.
        let s = mpo_dense_vs_gate(&g);
        let mut state = ndarray::Array2::<C64>::zeros((m_local, m_local));
        state[[0, 0]] = c64(1.0, 0.0);
        let sd = crate::mpo::Mpo::from_tensors(vec![Array4::from_shape_fn(
            (1, m_local, m_local, 1),
            |(_, k, b, _)| state[[k, b]],
        )])
        .unwrap();
        let mut ledger = crate::mpo::FpoLedger::new();
        // rho <- G^dag rho G realizes conjugation by S when G = S.
        let rho = crate::mpo::apply_gate(
            &sd,
            &g.mpo,
            &crate::mpo::CompressionConfig::eps_only(0.0),
            &mut ledger,
        )
        .unwrap();
        let mom = crate::mpo::measure_moments(&rho, Species::Bosonic).unwrap();
        let expect = 0.5f64.sinh().powi(2);
        assert!(
            (mom.gamma[(0, 0)].re - expect).abs() < 1e-6,
            "got {}, want {expect}",
            mom.gamma[(0, 0)].re
        );
        let _ = s;
    }

    #[test]
    fn fermionic_phase_shifter_phase_on_occupied() {
        let g = dense_gate(&GateKind::PhaseShifter { phi: 0.9 }, Species::Fermionic, 2).unwrap();
        assert!((g[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((g[(1, 1)] - c64(0.0, 0.9).exp()).norm() < 1e-15);
    }

    #[test]
    fn fermionic_squeeze_pair_rotates_vacuum() {
        let g = dense_gate(&GateKind::SqueezePair { theta: 0.3 }, Species::Fermionic, 2).unwrap();
        // |00> -> cos(0.3) |00> + sin(0.3) |11>.
        assert!((g[(0, 0)] - c64(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((g[(3, 0)] - c64(0.3f64.sin(), 0.0)).norm() < 1e-14);
        assert!(g[(1, 0)].norm() < 1e-15);
        assert!(unitarity_defect(&g) < 1e-13);
    }

    #[test]
    fn fermionic_beam_splitter_exchanges_occupation() {
        let g = dense_gate(
            &GateKind::BeamSplitter { theta: std::f64::consts::FRAC_PI_2, phi: 0.0 },
            Species::Fermionic,
            2,
        )
        .unwrap();
        // |10> (index 2) -> i |01> (index 1).
        assert!((g[(1, 2)] - c64(0.0, 1.0)).norm() < 1e-13);
        assert!(unitarity_defect(&g) < 1e-13);
    }

    #[test]
    fn swap_conjugation_property() {
        // x f x = f^dag on the 2x2 representation.
        let x = dense_gate(&GateKind::SwapMode, Species::Fermionic, 2).unwrap();
        let f = to_nalgebra(&annihilation_matrix(Species::Fermionic, 2));
        let lhs = &x * &f * &x;
        let rhs = f.adjoint();
        assert!(frobenius(&(lhs - rhs)) < 1e-15);
        assert!(unitarity_defect(&x) < 1e-15);
    }

    #[test]
    fn swap_mpo_carries_z_string() {
        let g = gate_mpo(&spec_one(GateKind::SwapMode, 2), Species::Fermionic, 4, 2).unwrap();
        assert_eq!(g.mpo.max_bond(), 1);
        let dense = g.mpo.to_dense();
        // Dense = Z (x) Z (x) sigma^x (x) I; check one string sign:
        // state |1 0 1 0> (index 0b1010 = 10) maps to -|1 0 0 0> (index 8).
        assert!((dense[[8, 10]] - c64(-1.0, 0.0)).norm() < 1e-14);
        // And |0 0 1 0> -> +|0 0 0 0>.
        assert!((dense[[0, 2]] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gate_mpos_match_dense_exponentials() {
        for (kind, species, m_local) in [
            (GateKind::BeamSplitter { theta: 0.4, phi: 1.1 }, Species::Bosonic, 3),
            (GateKind::SqueezePair { theta: 0.6 }, Species::Fermionic, 2),
            (GateKind::BeamSplitter { theta: 0.9, phi: 0.2 }, Species::Fermionic, 2),
        ] {
            let g = gate_mpo(&spec_two(kind, 0), species, 2, m_local).unwrap();
            let d = local_dim(species, m_local);
            let dense = dense_gate(&kind, species, m_local).unwrap();
            let from_mpo = g.mpo.to_dense();
            let mut defect = 0.0f64;
            for i in 0..d * d {
                for j in 0..d * d {
                    defect += (from_mpo[[i, j]] - dense[(i, j)]).norm_sqr();
                }
            }
            assert!(defect.sqrt() < 1e-12);
            // Two-site gate bond is at most d^2 on the active bond.
            assert!(g.mpo.bond_dims()[1] <= d * d);
        }
    }

    #[test]
    fn truncated_bosonic_gate_unitary_on_low_blocks() {
        // ||G^dag G - 1|| restricted to total excitation <= M - 2.
        let m_local = 6;
        let g = dense_gate(
            &GateKind::BeamSplitter { theta: 0.8, phi: 0.5 },
            Species::Bosonic,
            m_local,
        )
        .unwrap();
        let gram = g.adjoint() * &g;
        for k1 in 0..m_local {
            for k2 in 0..m_local {
                for b1 in 0..m_local {
                    for b2 in 0..m_local {
                        if k1 + k2 + 2 <= m_local && b1 + b2 + 2 <= m_local {
                            let want = if (k1, k2) == (b1, b2) { 1.0 } else { 0.0 };
                            let z = gram[(k1 * m_local + k2, b1 * m_local + b2)];
                            assert!((z - c64(want, 0.0)).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_species_rejected() {
        assert!(matches!(
            dense_gate(&GateKind::SqueezeSingle { z: 0.1 }, Species::Fermionic, 2),
            Err(Error::InvalidGateKind { .. })
        ));
        assert!(matches!(
            dense_gate(&GateKind::SwapMode, Species::Bosonic, 4),
            Err(Error::InvalidGateKind { .. })
        ));
    }
}
