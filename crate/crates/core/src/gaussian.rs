//! Quadratic Hamiltonians, normal-mode (Bogoliubov) decompositions and exact
//! thermal moments.
//!
//! A quadratic Hamiltonian of `N` modes is stored through its hermitian
//! `alpha` (hopping) and `zeta` (pairing) blocks; the assembled `2N x 2N`
//! Hamilton matrix acts on the ladder vector `(a_1..a_N, a_1^dag..a_N^dag)`.
//! The normal-mode decomposition produces a Bogoliubov matrix `T` and
//! positive frequencies `D` with `(T^-1)^dag H T^-1 = D (+) nu D`; thermal
//! states factorize over the normal modes, which is what the whole MPO
//! construction rests on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{c64, eigh, frobenius, hermiticity_defect, hermitize, sqrt_positive};
use crate::{tol, C64, Error, Result};

/// Particle species; fixes the sign `nu` in the Hamiltonian and the
/// (anti)commutation metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Bosonic,
    Fermionic,
}

impl Species {
    /// +1 for bosons, -1 for fermions.
    pub fn nu(self) -> f64 {
        match self {
            Species::Bosonic => 1.0,
            Species::Fermionic => -1.0,
        }
    }
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Species::Bosonic => write!(f, "bosonic"),
            Species::Fermionic => write!(f, "fermionic"),
        }
    }
}

/// Validated quadratic Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonMatrix {
    species: Species,
    n_modes: usize,
    alpha: DMatrix<C64>,
    zeta: DMatrix<C64>,
}

/// Assemble and validate a Hamilton matrix from its `alpha` and `zeta`
/// blocks. Violations of hermiticity or of the species-dependent symmetry of
/// `zeta` are rejected, not repaired.
pub fn build_hamilton_matrix(
    species: Species,
    alpha: DMatrix<C64>,
    zeta: DMatrix<C64>,
) -> Result<HamiltonMatrix> {
    if alpha.nrows() != alpha.ncols() {
        return Err(Error::NotSquare { rows: alpha.nrows(), cols: alpha.ncols() });
    }
    if zeta.shape() != alpha.shape() {
        return Err(Error::ShapeMismatch {
            context: format!("alpha is {:?}, zeta is {:?}", alpha.shape(), zeta.shape()),
        });
    }
    let herm = hermiticity_defect(&alpha);
    if herm > tol::INPUT_SYMMETRY {
        return Err(Error::AlphaNotHermitian { defect: herm });
    }
    let (expected, defect) = match species {
        Species::Bosonic => ("symmetric", crate::linalg::symmetry_defect(&zeta)),
        Species::Fermionic => ("antisymmetric", crate::linalg::antisymmetry_defect(&zeta)),
    };
    if defect > tol::INPUT_SYMMETRY {
        return Err(Error::ZetaWrongSymmetry { expected, defect });
    }
    Ok(HamiltonMatrix { species, n_modes: alpha.nrows(), alpha, zeta })
}

impl HamiltonMatrix {
    pub fn species(&self) -> Species {
        self.species
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn alpha(&self) -> &DMatrix<C64> {
        &self.alpha
    }

    pub fn zeta(&self) -> &DMatrix<C64> {
        &self.zeta
    }

    /// The assembled hermitian `2N x 2N` matrix
    /// `[[alpha, nu zeta*], [zeta, nu alpha*]]`.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.n_modes;
        let nu = c64(self.species.nu(), 0.0);
        let mut h = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = self.alpha[(i, j)];
                h[(i, n + j)] = nu * self.zeta[(i, j)].conj();
                h[(n + i, j)] = self.zeta[(i, j)];
                h[(n + i, n + j)] = nu * self.alpha[(i, j)].conj();
            }
        }
        h
    }
}

/// The commutation metric: `diag(1, -1)` for bosons (CCR), the identity for
/// fermions (CAR).
pub fn omega(species: Species, n_modes: usize) -> DMatrix<C64> {
    let lower = -species.nu();
    DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| {
        if i != j {
            c64(0.0, 0.0)
        } else if i < n_modes {
            c64(1.0, 0.0)
        } else {
            c64(lower, 0.0)
        }
    })
}

/// Normal-mode decomposition `(T, D)` of a Hamilton matrix.
#[derive(Debug, Clone)]
pub struct NormalModeDecomposition {
    pub species: Species,
    pub n_modes: usize,
    /// Bogoliubov matrix with block structure [[gamma, mu], [mu*, gamma*]].
    pub t: DMatrix<C64>,
    /// Normal frequencies, sorted ascending, all positive.
    pub d: DVector<f64>,
}

impl NormalModeDecomposition {
    /// Upper-left (`gamma`) block of `T`.
    pub fn gamma_block(&self) -> DMatrix<C64> {
        self.t.view((0, 0), (self.n_modes, self.n_modes)).into_owned()
    }

    /// Upper-right (`mu`) block of `T`; zero iff the transformation is passive.
    pub fn mu_block(&self) -> DMatrix<C64> {
        self.t.view((0, self.n_modes), (self.n_modes, self.n_modes)).into_owned()
    }

    /// True when the `mu` block vanishes (excitation-preserving Hamiltonian).
    pub fn is_passive(&self) -> bool {
        frobenius(&self.mu_block()) <= tol::BOGOLIUBOV_BLOCK * frobenius(&self.t).max(1.0)
    }

    pub fn t_inverse(&self) -> DMatrix<C64> {
        match self.species {
            // T^-1 = Omega T^dag Omega from the symplectic relation.
            Species::Bosonic => {
                let om = omega(Species::Bosonic, self.n_modes);
                &om * self.t.adjoint() * &om
            }
            Species::Fermionic => self.t.adjoint(),
        }
    }
}

/// Fix the global phase of an eigenvector so its largest-magnitude component
/// is real and positive; keeps decompositions deterministic.
fn fix_phase(v: &mut DVector<C64>) {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm_sqr() > best {
            best = z.norm_sqr();
            idx = i;
        }
    }
    let z = v[idx];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Block-swap conjugation `Sigma v*` used to pair particle and hole
/// eigenvectors; `Sigma` exchanges the upper and lower halves.
fn sigma_conj(v: &DVector<C64>) -> DVector<C64> {
    let n2 = v.len();
    let n = n2 / 2;
    DVector::from_fn(n2, |i, _| {
        if i < n { v[n + i].conj() } else { v[i - n].conj() }
    })
}

/// Re-orthonormalize eigenvector clusters belonging to (nearly) degenerate
/// eigenvalues with modified Gram-Schmidt.
fn gram_schmidt_clusters(vals: &[f64], vecs: &mut [DVector<C64>], tol_abs: f64) -> Result<()> {
    let n = vals.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[end - 1]).abs() <= tol_abs {
            end += 1;
        }
        for k in start..end {
            for j in start..k {
                let ip: C64 =
                    vecs[j].iter().zip(vecs[k].iter()).map(|(a, b)| a.conj() * b).sum();
                let prev = vecs[j].clone();
                vecs[k] -= prev * ip;
            }
            let norm = vecs[k].norm();
            if norm < 1e-10 {
                return Err(Error::DegeneratePairing {
                    context: format!(
                        "rank deficiency while orthonormalizing cluster {start}..{end}"
                    ),
                });
            }
            vecs[k] /= c64(norm, 0.0);
        }
        start = end;
    }
    Ok(())
}

/// Average the computed matrix with its block-conjugate so the Bogoliubov
/// structure [[gamma, mu], [mu*, gamma*]] holds exactly, removing rounding
/// noise without touching the exact-arithmetic value.
fn project_block_structure(t: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let g = (t[(i, j)] + t[(n + i, n + j)].conj()) * 0.5;
            let m = (t[(i, n + j)] + t[(n + i, j)].conj()) * 0.5;
            out[(i, j)] = g;
            out[(i, n + j)] = m;
            out[(n + i, j)] = m.conj();
            out[(n + i, n + j)] = g.conj();
        }
    }
    out
}

/// Compute the normal-mode decomposition of a Hamilton matrix.
///
/// Bosonic path: `H^(1/2)` by hermitian square root, unitary diagonalization
/// of `H^(1/2) Omega H^(1/2)`, and `T = (D^(-1/2) (+) D^(-1/2)) U H^(1/2)`.
/// Fermionic path: hermitian eigendecomposition of `H` with particle-hole
/// paired eigenvectors `(v, Sigma v*)`.
pub fn normal_mode_decompose(h: &HamiltonMatrix) -> Result<NormalModeDecomposition> {
    let n = h.n_modes;
    let hm = hermitize(&h.matrix());
    let (t, d) = match h.species {
        Species::Bosonic => bosonic_decompose(&hm, n)?,
        Species::Fermionic => fermionic_decompose(&hm, n)?,
    };
    let t = project_block_structure(&t, n);
    let nmd = NormalModeDecomposition { species: h.species, n_modes: n, t, d };
    verify_decomposition(&nmd, &hm)?;
    Ok(nmd)
}

fn bosonic_decompose(hm: &DMatrix<C64>, n: usize) -> Result<(DMatrix<C64>, DVector<f64>)> {
    let root = sqrt_positive(hm, tol::POSITIVITY)?;
    let om = omega(Species::Bosonic, n);
    let w = hermitize(&(&root * &om * &root));
    let (vals, vecs) = eigh(&w);

    // Exactly N positive and N negative eigenvalues (W is congruent to Omega).
    let scale = vals.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut plus: Vec<(f64, DVector<C64>)> = Vec::with_capacity(n);
    for k in 0..2 * n {
        if vals[k] > 0.0 {
            plus.push((vals[k], vecs.column(k).into_owned()));
        }
    }
    if plus.len() != n {
        return Err(Error::DegeneratePairing {
            context: format!("expected {n} positive symplectic eigenvalues, found {}", plus.len()),
        });
    }
    plus.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let dvals: Vec<f64> = plus.iter().map(|p| p.0).collect();
    let mut pvecs: Vec<DVector<C64>> = plus.into_iter().map(|p| p.1).collect();
    gram_schmidt_clusters(&dvals, &mut pvecs, tol::DEGENERACY_CLUSTER * scale.max(1.0))?;
    for v in pvecs.iter_mut() {
        fix_phase(v);
    }

    // Rows of U: positive eigenvectors as bras, then their particle-hole
    // conjugates; this choice gives T its Bogoliubov block structure.
    let mut u = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for (i, v) in pvecs.iter().enumerate() {
        let w = sigma_conj(v);
        for j in 0..2 * n {
            u[(i, j)] = v[j].conj();
            u[(n + i, j)] = w[j].conj();
        }
    }
    let dinv_half = DMatrix::<C64>::from_fn(2 * n, 2 * n, |i, j| {
        if i == j {
            c64(1.0 / dvals[i % n].sqrt(), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let t = dinv_half * u * root;
    Ok((t, DVector::from_vec(dvals)))
}

fn fermionic_decompose(hm: &DMatrix<C64>, n: usize) -> Result<(DMatrix<C64>, DVector<f64>)> {
    let (vals, vecs) = eigh(hm);
    let scale = vals.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let zero_tol = tol::DEGENERACY_CLUSTER * scale.max(1.0);
    let mut plus: Vec<(f64, DVector<C64>)> = Vec::with_capacity(n);
    for k in 0..2 * n {
        if vals[k].abs() <= zero_tol {
            return Err(Error::DegeneratePairing {
                context: format!("zero mode d = {:.3e}; particle-hole pairing undefined", vals[k]),
            });
        }
        if vals[k] > 0.0 {
            plus.push((vals[k], vecs.column(k).into_owned()));
        }
    }
    if plus.len() != n {
        return Err(Error::DegeneratePairing {
            context: format!("expected {n} positive eigenvalues, found {}", plus.len()),
        });
    }
    plus.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let dvals: Vec<f64> = plus.iter().map(|p| p.0).collect();
    let mut pvecs: Vec<DVector<C64>> = plus.into_iter().map(|p| p.1).collect();
    gram_schmidt_clusters(&dvals, &mut pvecs, zero_tol)?;
    for v in pvecs.iter_mut() {
        fix_phase(v);
    }
    let mut t = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for (i, v) in pvecs.iter().enumerate() {
        let w = sigma_conj(v);
        for j in 0..2 * n {
            t[(i, j)] = v[j].conj();
            t[(n + i, j)] = w[j].conj();
        }
    }
    Ok((t, DVector::from_vec(dvals)))
}

/// Verify every invariant of a freshly computed decomposition; failures are
/// reported instead of silently accepting a bad basis.
fn verify_decomposition(nmd: &NormalModeDecomposition, hm: &DMatrix<C64>) -> Result<()> {
    let n = nmd.n_modes;
    let t = &nmd.t;
    let scale = frobenius(t).max(1.0);

    // Block structure: lower-left = conj(upper-right), lower-right = conj(upper-left).
    let mut block_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            block_defect += (t[(n + i, j)] - t[(i, n + j)].conj()).norm_sqr();
            block_defect += (t[(n + i, n + j)] - t[(i, j)].conj()).norm_sqr();
        }
    }
    let block_defect = block_defect.sqrt() / scale;
    if block_defect > tol::BOGOLIUBOV_BLOCK {
        return Err(Error::DecompositionDefect { relation: "block structure", defect: block_defect });
    }

    match nmd.species {
        Species::Bosonic => {
            let om = omega(Species::Bosonic, n);
            let d1 = frobenius(&(t * &om * t.adjoint() - &om));
            let d2 = frobenius(&(t.adjoint() * &om * t - &om));
            let defect = d1.max(d2);
            if defect > tol::BOGOLIUBOV_RELATION * scale {
                return Err(Error::DecompositionDefect { relation: "symplectic relation", defect });
            }
        }
        Species::Fermionic => {
            let eye = DMatrix::<C64>::identity(2 * n, 2 * n);
            let d1 = frobenius(&(t.adjoint() * t - &eye));
            let d2 = frobenius(&(t * t.adjoint() - &eye));
            let defect = d1.max(d2);
            if defect > tol::BOGOLIUBOV_RELATION * scale {
                return Err(Error::DecompositionDefect { relation: "unitarity", defect });
            }
        }
    }

    // Diagonalization: (T^-1)^dag H T^-1 = D (+) nu D.
    let tinv = nmd.t_inverse();
    let diag = tinv.adjoint() * hm * &tinv;
    let nu = nmd.species.nu();
    let target = DMatrix::<C64>::from_fn(2 * n, 2 * n, |i, j| {
        if i != j {
            c64(0.0, 0.0)
        } else if i < n {
            c64(nmd.d[i], 0.0)
        } else {
            c64(nu * nmd.d[i - n], 0.0)
        }
    });
    let defect = frobenius(&(diag - target)) / frobenius(hm).max(1.0);
    if defect > tol::BOGOLIUBOV_RELATION {
        return Err(Error::DecompositionDefect { relation: "diagonalization", defect });
    }
    Ok(())
}

/// Inverse temperature and (fermionic) chemical potential.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub beta: f64,
    /// Chemical potential; must be zero for bosons.
    #[serde(default)]
    pub mu: f64,
}

impl ThermalSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidThermalSpec { context: format!("beta = {beta} must be > 0") });
        }
        Ok(ThermalSpec { beta, mu: 0.0 })
    }

    pub fn with_mu(beta: f64, mu: f64, species: Species) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidThermalSpec { context: format!("beta = {beta} must be > 0") });
        }
        if species == Species::Bosonic && mu != 0.0 {
            return Err(Error::InvalidThermalSpec {
                context: "chemical potential requires fermionic species".into(),
            });
        }
        Ok(ThermalSpec { beta, mu })
    }
}

/// First and second moments of a state under the doubled ladder ordering
/// `(a_1..a_N, a_1^dag..a_N^dag)`.
#[derive(Debug, Clone)]
pub struct Moments {
    /// First moments `tr(rho a_i)`, length 2N.
    pub m: DVector<C64>,
    /// Second moments `gamma_ij = tr(rho a_i^dag a_j)`, 2N x 2N hermitian.
    pub gamma: DMatrix<C64>,
}

/// Shifted normal frequencies `d_i - mu/2`; the chemical potential enters the
/// fermionic thermal state only through this shift.
pub fn shifted_frequencies(nmd: &NormalModeDecomposition, spec: &ThermalSpec) -> DVector<f64> {
    let shift = match nmd.species {
        Species::Bosonic => 0.0,
        Species::Fermionic => spec.mu / 2.0,
    };
    DVector::from_fn(nmd.n_modes, |i, _| nmd.d[i] - shift)
}

/// Mean occupation of one normal mode: `1 / (exp(2 beta d) - nu)`.
pub fn mean_occupation(species: Species, beta: f64, d: f64) -> f64 {
    let x = 2.0 * beta * d;
    match species {
        Species::Bosonic => 1.0 / x.exp_m1(),
        Species::Fermionic => 1.0 / (x.exp() + 1.0),
    }
}

/// Exact thermal moments: `m = 0` and
/// `gamma = T^dag [ nbar (+) (1 + nu nbar) ] T` with the chemical-potential
/// shift applied to the frequencies.
pub fn exact_thermal_moments(nmd: &NormalModeDecomposition, spec: &ThermalSpec) -> Moments {
    let occ = shifted_frequencies(nmd, spec)
        .map(|d| mean_occupation(nmd.species, spec.beta, d));
    gamma_from_occupations(nmd, &occ)
}

/// Transform per-normal-mode occupations into moments of the original modes.
///
/// Component-wise, `b = T a` gives `gamma_b = T* gamma_a T^T`, so
/// `gamma_a = conj(T^-1) gamma_b (T^-1)^T` with `gamma_b = nbar (+) (1 + nu
/// nbar)`. For passive real transformations this coincides with the simpler
/// congruence `T^dag gamma_b T`; the anomalous blocks of active
/// transformations fix the ordering used here (checked against the dense
/// Fock oracle).
pub fn gamma_from_occupations(nmd: &NormalModeDecomposition, occ: &DVector<f64>) -> Moments {
    let n = nmd.n_modes;
    let nu = nmd.species.nu();
    let mid = DMatrix::<C64>::from_fn(2 * n, 2 * n, |i, j| {
        if i != j {
            c64(0.0, 0.0)
        } else if i < n {
            c64(occ[i], 0.0)
        } else {
            c64(1.0 + nu * occ[i - n], 0.0)
        }
    });
    let tinv = nmd.t_inverse();
    let gamma = tinv.map(|z| z.conj()) * mid * tinv.transpose();
    Moments { m: DVector::zeros(2 * n), gamma: hermitize(&gamma) }
}

/// Mean occupation of a Fock-truncated normal-mode thermal state with
/// populations renormalized over `n < m_local`.
pub fn truncated_occupation(beta: f64, d: f64, m_local: usize) -> f64 {
    // Softmax-style shift keeps the ratios finite for any sign of d.
    let exps: Vec<f64> = (0..m_local).map(|n| -2.0 * beta * d * n as f64).collect();
    let emax = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut zn = 0.0;
    for (n, e) in exps.iter().enumerate() {
        let p = (e - emax).exp();
        z += p;
        zn += n as f64 * p;
    }
    zn / z
}

/// Smallest bosonic local dimension `M` such that the truncated normal-mode
/// thermal state, transformed back to the original modes, reproduces the
/// exact moments to relative accuracy `eps`.
pub fn min_local_dim(
    nmd: &NormalModeDecomposition,
    spec: &ThermalSpec,
    eps: f64,
) -> Result<usize> {
    if nmd.species != Species::Bosonic {
        return Err(Error::InvalidConfig {
            context: "min_local_dim applies to bosonic systems only".into(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig { context: format!("eps = {eps} must be > 0") });
    }
    let n = nmd.n_modes;
    let exact = exact_thermal_moments(nmd, spec);
    // The accuracy criterion lives on the N x N covariance
    // `gamma_ij = tr(rho a_i^dag a_j), i, j <= N`; including the conjugate
    // block would dilute the relative error with the O(1) `<a a^dag>`
    // entries and not reproduce the reference local dimensions.
    let exact_block = exact.gamma.view((0, 0), (n, n)).into_owned();
    let gamma_norm = frobenius(&exact_block);
    let mut m_local = 1usize;
    loop {
        let occ = DVector::from_fn(n, |i, _| truncated_occupation(spec.beta, nmd.d[i], m_local));
        let trunc = gamma_from_occupations(nmd, &occ);
        // First moments of the truncated state vanish identically (the state
        // is diagonal in the normal-mode Fock basis), so only gamma decides.
        let m_err = trunc.m.norm();
        let trunc_block = trunc.gamma.view((0, 0), (n, n)).into_owned();
        let g_err = frobenius(&(&trunc_block - &exact_block)) / gamma_norm;
        if m_err < eps && g_err < eps {
            return Ok(m_local);
        }
        m_local += 1;
    }
}
