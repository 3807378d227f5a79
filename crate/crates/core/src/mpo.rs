//! Matrix-product-operator algebra with exact floating-point-operation
//! accounting.
//!
//! Site tensors are 4-index arrays indexed `(left bond, ket, bra, right
//! bond)`; an MPO represents `sum A^1 A^2 .. |k1 k2 ..><b1 b2 ..|`. Bond
//! dimensions satisfy `r_0 = r_N = 1`. The ledger charges every dot, QR, SVD
//! and shift contraction with the closed-form cost of its recorded shapes,
//! so totals depend only on the shape sequence, never on wall time.

use std::collections::BTreeMap;

use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::gaussian::{Moments, Species};
use crate::linalg::{c64, qr_thin, svd, to_nalgebra, to_ndarray};
use crate::{C64, Error, Result};

// ---------------------------------------------------------------------------
// fpo ledger
// ---------------------------------------------------------------------------

/// Operation kinds tracked by the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpoKind {
    Dot,
    Qr,
    Svd,
    MatmulShift,
}

/// Cumulative floating-point-operation counts, itemized by kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FpoLedger {
    counters: BTreeMap<FpoKind, u64>,
}

impl FpoLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, kind: FpoKind, amount: u64) {
        *self.counters.entry(kind).or_insert(0) += amount;
    }

    pub fn get(&self, kind: FpoKind) -> u64 {
        self.counters.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counters.values().sum()
    }

    /// Merge counts from another ledger; addition is commutative so totals
    /// are independent of aggregation order.
    pub fn merge(&mut self, other: &FpoLedger) {
        for (kind, amount) in &other.counters {
            self.add(*kind, *amount);
        }
    }

    pub fn counters(&self) -> &BTreeMap<FpoKind, u64> {
        &self.counters
    }
}

/// Closed-form fpo costs. Implementation and tests both call these, so
/// ledger exactness is a matter of shape bookkeeping only.
pub mod cost {
    /// Per-site dot product: `r^A_{l-1} r^B_{l-1} r^A_l r^B_l d^2 (2d - 1)`.
    pub fn dot_site(ra_l: usize, rb_l: usize, ra_r: usize, rb_r: usize, d: usize) -> u64 {
        (ra_l * rb_l * ra_r * rb_r * d * d * (2 * d - 1)) as u64
    }

    /// QR (or LQ) of an `m x n` matrix with rank bound `min(m, n)`.
    pub fn qr(m: usize, n: usize) -> u64 {
        (m * n * m.min(n)) as u64
    }

    /// Exact matrix product `(m x k) (k x n)`: `m n (2k - 1)` operations.
    pub fn matmul(m: usize, k: usize, n: usize) -> u64 {
        (m * n * (2 * k - 1)) as u64
    }

    /// SVD of an `m x n` matrix in canonical position: `m n^2`.
    pub fn svd(m: usize, n: usize) -> u64 {
        (m * n * n) as u64
    }

    /// Shifting the truncated `S V^dag` into the next tensor:
    /// `r''^2 r' + r'' r'_next d_next^2 r'`.
    pub fn svd_shift(r_trunc: usize, r_prime: usize, r_prime_next: usize, d_next: usize) -> u64 {
        (r_trunc * r_trunc * r_prime + r_trunc * r_prime_next * d_next * d_next * r_prime) as u64
    }
}

// ---------------------------------------------------------------------------
// MPO type
// ---------------------------------------------------------------------------

/// Canonical-form bookkeeping; `Left`/`Right` mean every site except the
/// terminal one is an isometry in that direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalForm {
    None,
    Left,
    Right,
}

/// Matrix product operator.
#[derive(Debug, Clone)]
pub struct Mpo {
    tensors: Vec<Array4<C64>>,
    canonical: CanonicalForm,
}

/// Compression policy: relative discarded-weight threshold and/or a hard
/// rank cap. At least one must be active.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub eps_rel: f64,
    pub r_max: Option<usize>,
}

impl CompressionConfig {
    pub fn new(eps_rel: f64, r_max: Option<usize>) -> Result<Self> {
        if !(eps_rel >= 0.0) {
            return Err(Error::InvalidConfig { context: format!("eps_rel = {eps_rel}") });
        }
        if let Some(r) = r_max {
            if r == 0 {
                return Err(Error::InvalidConfig { context: "r_max = 0".into() });
            }
        }
        Ok(CompressionConfig { eps_rel, r_max })
    }

    pub fn eps_only(eps_rel: f64) -> Self {
        CompressionConfig { eps_rel, r_max: None }
    }
}

impl Mpo {
    /// Build from site tensors, validating the bond chain.
    pub fn from_tensors(tensors: Vec<Array4<C64>>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::ShapeMismatch { context: "empty MPO".into() });
        }
        if tensors[0].shape()[0] != 1 || tensors.last().unwrap().shape()[3] != 1 {
            return Err(Error::ShapeMismatch { context: "terminal bonds must be 1".into() });
        }
        for w in tensors.windows(2) {
            if w[0].shape()[3] != w[1].shape()[0] {
                return Err(Error::ShapeMismatch { context: "bond chain mismatch".into() });
            }
        }
        for t in &tensors {
            if t.shape()[1] != t.shape()[2] {
                return Err(Error::ShapeMismatch { context: "ket and bra dims differ".into() });
            }
        }
        Ok(Mpo { tensors, canonical: CanonicalForm::None })
    }

    /// Identity operator with the given physical dimensions.
    pub fn identity(phys_dims: &[usize]) -> Self {
        let tensors = phys_dims
            .iter()
            .map(|&d| {
                Array4::from_shape_fn((1, d, d, 1), |(_, k, b, _)| {
                    if k == b { c64(1.0, 0.0) } else { c64(0.0, 0.0) }
                })
            })
            .collect();
        Mpo { tensors, canonical: CanonicalForm::None }
    }

    /// Product of diagonal single-site operators (rank-1 MPO).
    pub fn product_diagonal(site_diagonals: &[Vec<f64>]) -> Self {
        let tensors = site_diagonals
            .iter()
            .map(|diag| {
                let d = diag.len();
                Array4::from_shape_fn((1, d, d, 1), |(_, k, b, _)| {
                    if k == b { c64(diag[k], 0.0) } else { c64(0.0, 0.0) }
                })
            })
            .collect();
        Mpo { tensors, canonical: CanonicalForm::None }
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.shape()[1]).collect()
    }

    /// Bond dimensions `r_0 .. r_N` (length N + 1).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.tensors.iter().map(|t| t.shape()[0]).collect();
        out.push(self.tensors.last().unwrap().shape()[3]);
        out
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap()
    }

    pub fn tensor(&self, site: usize) -> &Array4<C64> {
        &self.tensors[site]
    }

    pub fn canonical(&self) -> CanonicalForm {
        self.canonical
    }

    /// Hermitian conjugate: swap ket/bra and conjugate entries.
    pub fn dagger(&self) -> Mpo {
        let tensors = self
            .tensors
            .iter()
            .map(|t| {
                let (l, k, b, r) = dims4(t);
                Array4::from_shape_fn((l, b, k, r), |(i, x, y, j)| t[[i, y, x, j]].conj())
            })
            .collect();
        Mpo { tensors, canonical: CanonicalForm::None }
    }

    /// Multiply site 0 by a scalar (scales the whole operator).
    pub fn scale(&self, factor: C64) -> Mpo {
        let mut out = self.clone();
        out.tensors[0].mapv_inplace(|z| z * factor);
        out
    }

    /// Trace by closing ket and bra legs.
    pub fn trace(&self) -> C64 {
        let mut acc = Array2::from_elem((1, 1), c64(1.0, 0.0));
        for t in &self.tensors {
            let (l, k, _, r) = dims4(t);
            let mut m = Array2::zeros((l, r));
            for i in 0..l {
                for j in 0..r {
                    let mut s = c64(0.0, 0.0);
                    for p in 0..k {
                        s += t[[i, p, p, j]];
                    }
                    m[[i, j]] = s;
                }
            }
            acc = acc.dot(&m);
        }
        acc[[0, 0]]
    }

    /// Normalize to unit trace by rescaling site 0.
    pub fn normalize(&self) -> Result<Mpo> {
        let tr = self.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::ZeroTrace);
        }
        Ok(self.scale(c64(1.0, 0.0) / tr))
    }

    /// Frobenius inner product `tr(self^dag other)`.
    pub fn frobenius_inner(&self, other: &Mpo) -> C64 {
        let mut acc = Array2::from_elem((1, 1), c64(1.0, 0.0));
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            let (la, k, kb, ra) = dims4(a);
            let (lb, _, _, rb) = dims4(b);
            let mut m = Array2::zeros((la * lb, ra * rb));
            for i in 0..la {
                for i2 in 0..lb {
                    for j in 0..ra {
                        for j2 in 0..rb {
                            let mut s = c64(0.0, 0.0);
                            for p in 0..k {
                                for q in 0..kb {
                                    s += a[[i, p, q, j]].conj() * b[[i2, p, q, j2]];
                                }
                            }
                            m[[i * lb + i2, j * rb + j2]] = s;
                        }
                    }
                }
            }
            acc = acc.dot(&m);
        }
        acc[[0, 0]]
    }

    /// Frobenius norm of the represented operator.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).re.max(0.0).sqrt()
    }

    /// Relative hermiticity defect `||rho - rho^dag||_F / ||rho||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let norm_sq = self.frobenius_inner(self).re;
        let cross = self.frobenius_inner(&self.dagger()).re;
        let diff = (2.0 * norm_sq - 2.0 * cross).max(0.0);
        diff.sqrt() / norm_sq.max(1e-300).sqrt()
    }

    /// Contract to the dense operator (row = ket multi-index, col = bra),
    /// with the first site the most significant digit.
    pub fn to_dense(&self) -> Array2<C64> {
        let mut acc: Array4<C64> = Array4::from_elem((1, 1, 1, 1), c64(1.0, 0.0));
        for t in &self.tensors {
            let (_, k, _, r) = dims4(t);
            let (_, pk, pb, pl) = dims4(&acc);
            let mut next = Array4::zeros((1, pk * k, pb * k, r));
            for a in 0..pk {
                for b in 0..pb {
                    for l in 0..pl {
                        for x in 0..k {
                            for y in 0..k {
                                for j in 0..r {
                                    next[[0, a * k + x, b * k + y, j]] +=
                                        acc[[0, a, b, l]] * t[[l, x, y, j]];
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
        }
        let (_, dk, db, _) = dims4(&acc);
        Array2::from_shape_fn((dk, db), |(i, j)| acc[[0, i, j, 0]])
    }
}

fn dims4(t: &Array4<C64>) -> (usize, usize, usize, usize) {
    let s = t.shape();
    (s[0], s[1], s[2], s[3])
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Operator product `A . B` (contracting A's bra legs with B's ket legs).
/// Result bond dimensions are the products of the operands'.
pub fn mpo_dot(a: &Mpo, b: &Mpo, ledger: &mut FpoLedger) -> Result<Mpo> {
    if a.n_sites() != b.n_sites() || a.phys_dims() != b.phys_dims() {
        return Err(Error::ShapeMismatch {
            context: "dot operands differ in site count or physical dims".into(),
        });
    }
    let mut tensors = Vec::with_capacity(a.n_sites());
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        let (la, k, _, ra) = dims4(ta);
        let (lb, _, _, rb) = dims4(tb);
        let d = k;
        ledger.add(FpoKind::Dot, cost::dot_site(la, lb, ra, rb, d));
        // Contract the shared physical leg as one matrix product:
        // A[(la x ra), p] . B[p, (lb y rb)], then regroup the bonds.
        let a_mat = ta
            .view()
            .permuted_axes([0, 1, 3, 2])
            .as_standard_layout()
            .to_owned()
            .into_shape((la * d * ra, d))
            .unwrap();
        let b_mat = tb
            .view()
            .permuted_axes([1, 0, 2, 3])
            .as_standard_layout()
            .to_owned()
            .into_shape((d, lb * d * rb))
            .unwrap();
        let prod = crate::linalg::matmul_nd(&a_mat, &b_mat);
        let six = prod.into_shape((la, d, ra, lb, d, rb)).unwrap();
        let out = six
            .permuted_axes([0, 3, 1, 4, 2, 5])
            .as_standard_layout()
            .to_owned()
            .into_shape((la * lb, d, d, ra * rb))
            .unwrap();
        tensors.push(out);
    }
    Ok(Mpo { tensors, canonical: CanonicalForm::None })
}

/// Left-canonicalize by successive QR decompositions; the represented
/// operator is unchanged.
pub fn canonicalize(m: &Mpo, ledger: &mut FpoLedger) -> Mpo {
    let mut tensors = m.tensors.clone();
    let n = tensors.len();
    for l in 0..n.saturating_sub(1) {
        let (rl, d, _, rr) = dims4(&tensors[l]);
        let mat = fuse_left(&tensors[l]);
        ledger.add(FpoKind::Qr, cost::qr(rl * d * d, rr));
        let (q, r) = qr_thin(&to_nalgebra(&mat));
        let rp = q.ncols();
        tensors[l] = split_left(&to_ndarray(&q), rl, d, rp);
        // Absorb R into the next site.
        let (_, d2, _, rr2) = dims4(&tensors[l + 1]);
        ledger.add(FpoKind::MatmulShift, cost::matmul(rp, rr, d2 * d2 * rr2));
        let next = fuse_right(&tensors[l + 1]);
        let shifted = to_ndarray(&crate::linalg::matmul(&r, &to_nalgebra(&next)));
        tensors[l + 1] = split_right(&shifted, rp, d2, rr2);
    }
    Mpo { tensors, canonical: CanonicalForm::Left }
}

/// Right-canonicalize by successive LQ decompositions (mirror sweep).
pub fn canonicalize_right(m: &Mpo, ledger: &mut FpoLedger) -> Mpo {
    let mut tensors = m.tensors.clone();
    let n = tensors.len();
    for l in (1..n).rev() {
        let (rl, d, _, rr) = dims4(&tensors[l]);
        let mat = fuse_right(&tensors[l]); // rl x (d^2 rr)
        ledger.add(FpoKind::Qr, cost::qr(rl, d * d * rr));
        // A = L Q via QR of A^dag.
        let (q, r) = qr_thin(&to_nalgebra(&mat).adjoint());
        let rp = q.ncols();
        let lmat = r.adjoint(); // rl x rp
        tensors[l] = split_right(&to_ndarray(&q.adjoint()), rp, d, rr);
        let (ll, d2, _, _) = dims4(&tensors[l - 1]);
        ledger.add(FpoKind::MatmulShift, cost::matmul(ll * d2 * d2, rl, rp));
        let prev = fuse_left(&tensors[l - 1]);
        let shifted = to_ndarray(&crate::linalg::matmul(&to_nalgebra(&prev), &lmat));
        tensors[l - 1] = split_left(&shifted, ll, d2, rp);
    }
    Mpo { tensors, canonical: CanonicalForm::Right }
}

/// Truncate bond dimensions with the two-step scheme: a right-to-left QR
/// pass (skipped when already right-canonical) followed by a left-to-right
/// sweep of truncated SVDs.
///
/// Returns the compressed MPO and the per-bond relative discarded weights
/// (sum of discarded squared singular values over the total).
pub fn svd_compress(
    m: &Mpo,
    cfg: &CompressionConfig,
    ledger: &mut FpoLedger,
) -> (Mpo, Vec<f64>) {
    let n = m.n_sites();
    let mut work = if m.canonical == CanonicalForm::Right {
        m.clone()
    } else {
        canonicalize_right(m, ledger)
    };
    let mut discarded = vec![0.0; n.saturating_sub(1)];
    for l in 0..n.saturating_sub(1) {
        let (rl, d, _, rr) = dims4(&work.tensors[l]);
        let mat = fuse_left(&work.tensors[l]);
        ledger.add(FpoKind::Svd, cost::svd(rl * d * d, rr));
        let (u, s, v) = svd(&to_nalgebra(&mat));
        let total: f64 = s.iter().map(|x| x * x).sum();
        let k_max = s.len();
        // Smallest rank whose discarded tail obeys eps_rel, then the cap.
        let mut keep = k_max;
        if total > 0.0 {
            let mut tail = 0.0;
            for k in (1..=k_max).rev() {
                let cand = tail + s[k - 1] * s[k - 1];
                if cand <= cfg.eps_rel * total {
                    tail = cand;
                    keep = k - 1;
                } else {
                    break;
                }
            }
        }
        if let Some(cap) = cfg.r_max {
            keep = keep.min(cap);
        }
        keep = keep.max(1);
        let tail: f64 = (keep..k_max).map(|k| s[k] * s[k]).sum();
        discarded[l] = if total > 0.0 { tail / total } else { 0.0 };

        let u_t = u.columns(0, keep).into_owned();
        work.tensors[l] = split_left(&to_ndarray(&u_t), rl, d, keep);
        // S V^dag, truncated, shifted into the next site.
        let mut sv = v.columns(0, keep).adjoint();
        for k in 0..keep {
            for col in 0..sv.ncols() {
                sv[(k, col)] *= c64(s[k], 0.0);
            }
        }
        let (_, d2, _, rr2) = dims4(&work.tensors[l + 1]);
        ledger.add(FpoKind::MatmulShift, cost::svd_shift(keep, rr, rr2, d2));
        let next = fuse_right(&work.tensors[l + 1]);
        let shifted = to_ndarray(&crate::linalg::matmul(&sv, &to_nalgebra(&next)));
        work.tensors[l + 1] = split_right(&shifted, keep, d2, rr2);
    }
    work.canonical = CanonicalForm::Left;
    (work, discarded)
}

/// Conjugate a state by a unitary gate: `rho <- G^dag rho G`, compressing
/// after each of the two MPO-MPO products.
pub fn apply_gate(
    rho: &Mpo,
    gate: &Mpo,
    cfg: &CompressionConfig,
    ledger: &mut FpoLedger,
) -> Result<Mpo> {
    let left = mpo_dot(&gate.dagger(), rho, ledger)?;
    let (left, _) = svd_compress(&left, cfg, ledger);
    let full = mpo_dot(&left, gate, ledger)?;
    let (full, _) = svd_compress(&full, cfg, ledger);
    Ok(full)
}

// Reshape helpers between (l, k, b, r) tensors and fused matrices.

fn fuse_left(t: &Array4<C64>) -> Array2<C64> {
    let (l, k, b, r) = dims4(t);
    let std = t.as_standard_layout();
    std.to_owned().into_shape((l * k * b, r)).unwrap()
}

fn split_left(m: &Array2<C64>, l: usize, d: usize, r: usize) -> Array4<C64> {
    m.to_owned().into_shape((l, d, d, r)).unwrap()
}

fn fuse_right(t: &Array4<C64>) -> Array2<C64> {
    let (l, k, b, r) = dims4(t);
    let std = t.as_standard_layout();
    std.to_owned().into_shape((l, k * b * r)).unwrap()
}

fn split_right(m: &Array2<C64>, l: usize, d: usize, r: usize) -> Array4<C64> {
    m.to_owned().into_shape((l, d, d, r)).unwrap()
}

// ---------------------------------------------------------------------------
// Moment measurement
// ---------------------------------------------------------------------------

/// Local ladder matrices. `annihilate[m, n] = <m| a |n>`.
pub fn annihilation_matrix(species: Species, d: usize) -> Array2<C64> {
    match species {
        Species::Bosonic => Array2::from_shape_fn((d, d), |(m, n)| {
            if n >= 1 && m == n - 1 { c64((n as f64).sqrt(), 0.0) } else { c64(0.0, 0.0) }
        }),
        Species::Fermionic => Array2::from_shape_fn((2, 2), |(m, n)| {
            if m == 0 && n == 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) }
        }),
    }
}

fn adjoint2(m: &Array2<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.ncols(), m.nrows()), |(i, j)| m[[j, i]].conj())
}

fn jw_z() -> Array2<C64> {
    Array2::from_shape_fn((2, 2), |(i, j)| {
        if i != j {
            c64(0.0, 0.0)
        } else if i == 0 {
            c64(1.0, 0.0)
        } else {
            c64(-1.0, 0.0)
        }
    })
}

/// Per-site matrices of one doubled-ladder entry: `index < N` is the
/// annihilation operator of that mode, `index >= N` the creation operator.
/// Fermionic entries carry the Jordan-Wigner string on preceding sites.
fn ladder_string(
    species: Species,
    index: usize,
    n: usize,
    phys_dims: &[usize],
) -> Vec<Option<Array2<C64>>> {
    let (site, creat) = if index < n { (index, false) } else { (index - n, true) };
    let local = {
        let a = annihilation_matrix(species, phys_dims[site]);
        if creat { adjoint2(&a) } else { a }
    };
    let mut ops: Vec<Option<Array2<C64>>> = vec![None; n];
    if species == Species::Fermionic {
        for op in ops.iter_mut().take(site) {
            *op = Some(jw_z());
        }
    }
    ops[site] = Some(local);
    ops
}

fn compose_site_ops(
    a: &[Option<Array2<C64>>],
    b: &[Option<Array2<C64>>],
) -> Vec<Option<Array2<C64>>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (None, None) => None,
            (Some(m), None) => Some(m.clone()),
            (None, Some(m)) => Some(m.clone()),
            (Some(m1), Some(m2)) => Some(m1.dot(m2)),
        })
        .collect()
}

/// Exact projected product of two same-site bosonic ladder operators:
/// evaluated in dimension `d + 1` so the transient intermediate of `a a^dag`
/// is kept, then cropped back. The product of truncated matrices would lose
/// the `(n + 1) = d` element on the top level.
fn exact_bosonic_pair(d: usize, first_create: bool, second_create: bool) -> Array2<C64> {
    let big = annihilation_matrix(Species::Bosonic, d + 1);
    let pick = |create: bool| if create { adjoint2(&big) } else { big.clone() };
    // Operator product: `first` is applied after `second` (matrix order
    // first . second).
    let prod = pick(first_create).dot(&pick(second_create));
    Array2::from_shape_fn((d, d), |(i, j)| prod[[i, j]])
}

/// `tr(rho . O)` for a product operator `O` given as per-site matrices.
fn trace_with_ops(rho: &Mpo, ops: &[Option<Array2<C64>>]) -> C64 {
    let mut acc = Array2::from_elem((1, 1), c64(1.0, 0.0));
    for (t, op) in rho.tensors.iter().zip(ops) {
        let (l, k, _, r) = dims4(t);
        let mut m = Array2::zeros((l, r));
        for i in 0..l {
            for j in 0..r {
                let mut s = c64(0.0, 0.0);
                match op {
                    None => {
                        for p in 0..k {
                            s += t[[i, p, p, j]];
                        }
                    }
                    Some(o) => {
                        // tr(|k><b| O) = O[b, k].
                        for p in 0..k {
                            for q in 0..k {
                                s += t[[i, p, q, j]] * o[[q, p]];
                            }
                        }
                    }
                }
                m[[i, j]] = s;
            }
        }
        acc = acc.dot(&m);
    }
    acc[[0, 0]]
}

/// First and second moments of the state: `m_i = tr(rho a_i)` over the 2N
/// doubled-ladder entries and `gamma_ij = tr(rho a_i^dag a_j)`. The state is
/// normalized internally; fermionic entries use exact Jordan-Wigner strings.
pub fn measure_moments(rho: &Mpo, species: Species) -> Result<Moments> {
    let n = rho.n_sites();
    let dims = rho.phys_dims();
    let tr = rho.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::ZeroTrace);
    }
    let inv = c64(1.0, 0.0) / tr;

    let strings: Vec<Vec<Option<Array2<C64>>>> =
        (0..2 * n).map(|i| ladder_string(species, i, n, &dims)).collect();
    let daggered: Vec<Vec<Option<Array2<C64>>>> = (0..2 * n)
        .map(|i| {
            let swapped = if i < n { i + n } else { i - n };
            strings[swapped].clone()
        })
        .collect();

    let m = nalgebra::DVector::from_fn(2 * n, |i, _| inv * trace_with_ops(rho, &strings[i]));
    let gamma = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let mut ops = compose_site_ops(&daggered[i], &strings[j]);
        if species == Species::Bosonic {
            let (site_i, create_j) = (i % n, j >= n);
            if site_i == j % n {
                // Same-site quadratic: substitute the exact projection.
                let first_create = i < n; // dagger of entry i
                ops[site_i] = Some(exact_bosonic_pair(dims[site_i], first_create, create_j));
            }
        }
        inv * trace_with_ops(rho, &ops)
    });
    Ok(Moments { m, gamma })
}
