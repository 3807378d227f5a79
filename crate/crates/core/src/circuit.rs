//! Compilation of passive unitaries into nearest-neighbour meshes and
//! assembly of the full circuit plan for the inverse normal-mode
//! transformation.
//!
//! Conventions. Every gate `G` has a single-particle action `sp(G)` on the
//! doubled ladder vector defined by `G^dag a G = sp(G) a`. Applying gates
//! `g_1, g_2, ..` to a state as `rho <- G^dag rho G` composes to conjugation
//! by `g_1 g_2 ..`, whose action is `sp(g_1) sp(g_2) ..`. Expanding the
//! normal-mode form of the Hamiltonian through `b_k = T_hat a_k T_hat^dag`
//! shows `exp(-beta H) = T_hat rho_b T_hat^dag`, so the applied product must
//! equal `T_hat^dag`, i.e. the ordered single-particle replay of the plan
//! must equal `T = U_bar S_bar V_bar^dag` itself (verified against the dense
//! Fock oracle; the anomalous covariance blocks fix the direction).
//!
//! The meshes are synthesized by Givens-style nulling with arbitrary 2x2
//! unitaries and then canonicalized in a single sweep into two-parameter
//! elements (phase shifter on the upper input followed by a beam splitter)
//! plus one explicit final layer of single-mode phase shifters.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::bloch_messiah::{BlochMessiahFactors, FermiSqueezeEntry, SqueezeSpec};
use crate::gaussian::Species;
use crate::linalg::{c64, frobenius, unitarity_defect};
use crate::{tol, C64, Error, Result};

/// Which mesh synthesis to use for the passive layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decomposition {
    /// Triangular mesh of depth 2N-3.
    Reck,
    /// Rectangular mesh of depth N.
    Clements,
}

impl std::fmt::Display for Decomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decomposition::Reck => write!(f, "reck"),
            Decomposition::Clements => write!(f, "clements"),
        }
    }
}

/// Gate kinds with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateKind {
    /// Two-parameter element: phase `phi` on the first (upper) input, then
    /// `B(theta) = exp(i theta (a_i^dag a_j + nu a_i a_j^dag))`.
    BeamSplitter { theta: f64, phi: f64 },
    /// `P(phi) = exp(i phi a^dag a)`.
    PhaseShifter { phi: f64 },
    /// Bosonic single-mode squeezer `S(z) = exp(z/2 (a^2 - a^dag^2))`.
    SqueezeSingle { z: f64 },
    /// Fermionic two-mode squeezer
    /// `S(theta) = exp(theta (f_i^dag f_j^dag + f_i f_j))`.
    SqueezePair { theta: f64 },
    /// Fermionic particle-hole swap `x = f + f^dag` (Jordan-Wigner string
    /// over all preceding sites).
    SwapMode,
    /// Explicit no-op placeholder.
    IdentityMode,
}

/// One gate of a circuit plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(flatten)]
    pub kind: GateKind,
    /// One site, or two adjacent sites.
    pub sites: Vec<usize>,
    /// Execution layer; gates within one layer act on disjoint sites.
    pub layer: usize,
}

impl GateSpec {
    fn one(kind: GateKind, site: usize, layer: usize) -> Self {
        GateSpec { kind, sites: vec![site], layer }
    }

    fn two(kind: GateKind, bond: usize, layer: usize) -> Self {
        GateSpec { kind, sites: vec![bond, bond + 1], layer }
    }
}

/// Ordered gate list realizing `rho_a = T^dag rho_b T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitPlan {
    pub species: Species,
    pub n_modes: usize,
    /// Application order; the single-particle replay of the full list equals
    /// `T^-1`.
    pub gates: Vec<GateSpec>,
    /// Marks the realized direction of the transformation.
    pub direction: PlanDirection,
}

/// The only direction this crate emits: the plan maps the normal-mode
/// product state to the interacting thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanDirection {
    InverseNormalMode,
}

impl CircuitPlan {
    /// Number of distinct layers occupied by two-site elements.
    pub fn mesh_depth(&self) -> usize {
        depth_of(&self.gates)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

/// Number of distinct layers among two-site gates.
pub fn depth_of(gates: &[GateSpec]) -> usize {
    let mut layers: Vec<usize> = gates
        .iter()
        .filter(|g| {
            matches!(g.kind, GateKind::BeamSplitter { .. } | GateKind::SqueezePair { .. })
        })
        .map(|g| g.layer)
        .collect();
    layers.sort_unstable();
    layers.dedup();
    layers.len()
}

// ---------------------------------------------------------------------------
// Abstract mesh synthesis
// ---------------------------------------------------------------------------

/// A 2x2 unitary acting on the adjacent pair `(bond, bond + 1)`.
struct AbstractGate {
    bond: usize,
    matrix: Matrix2<C64>,
}

/// Unitary row rotation nulling `b` in the pair `(a, b)^T`.
fn row_nulling(a: C64, b: C64) -> Matrix2<C64> {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r < 1e-300 {
        return Matrix2::identity();
    }
    Matrix2::new(a.conj() / r, b.conj() / r, -b / r, a / r)
}

/// Unitary column rotation nulling the left entry of the row pair `(a, b)`.
fn col_nulling(a: C64, b: C64) -> Matrix2<C64> {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r < 1e-300 {
        return Matrix2::identity();
    }
    Matrix2::new(b / r, a.conj() / r, -a / r, b.conj() / r)
}

fn apply_rows(w: &mut DMatrix<C64>, bond: usize, m: &Matrix2<C64>) {
    let n = w.ncols();
    for col in 0..n {
        let x = w[(bond, col)];
        let y = w[(bond + 1, col)];
        w[(bond, col)] = m[(0, 0)] * x + m[(0, 1)] * y;
        w[(bond + 1, col)] = m[(1, 0)] * x + m[(1, 1)] * y;
    }
}

fn apply_cols(w: &mut DMatrix<C64>, bond: usize, m: &Matrix2<C64>) {
    let n = w.nrows();
    for row in 0..n {
        let x = w[(row, bond)];
        let y = w[(row, bond + 1)];
        w[(row, bond)] = x * m[(0, 0)] + y * m[(1, 0)];
        w[(row, bond + 1)] = x * m[(0, 1)] + y * m[(1, 1)];
    }
}

/// Triangular (Reck) nulling: columns left to right, each column bottom-up
/// with rotations on adjacent row pairs. The emitted factor sequence `g_t`
/// satisfies `W = g_1 g_2 .. g_K D` with `D` diagonal.
///
/// Site 0 meets exactly one element (the shallow arm); site N-1 meets N-1.
fn reck_abstract(w0: &DMatrix<C64>) -> (Vec<AbstractGate>, Vec<C64>) {
    let n = w0.nrows();
    let mut w = w0.clone();
    let mut gates = Vec::with_capacity(n * (n - 1) / 2);
    for col in 0..n.saturating_sub(1) {
        for j in ((col + 1)..n).rev() {
            let rot = row_nulling(w[(j - 1, col)], w[(j, col)]);
            apply_rows(&mut w, j - 1, &rot);
            gates.push(AbstractGate { bond: j - 1, matrix: rot.adjoint() });
        }
    }
    let diag = (0..n).map(|i| w[(i, i)]).collect();
    (gates, diag)
}

/// Rectangular (Clements) nulling: anti-diagonals alternating between column
/// rotations (applied to W from the right) and row rotations (from the
/// left). Emits `W = A D B` re-ordered into `g_1 .. g_K D'` by pushing the
/// diagonal through the right-side factors.
fn clements_abstract(w0: &DMatrix<C64>) -> (Vec<AbstractGate>, Vec<C64>) {
    let n = w0.nrows();
    let mut w = w0.clone();
    let mut left: Vec<AbstractGate> = Vec::new(); // adjoints, application order
    let mut right: Vec<AbstractGate> = Vec::new(); // X ops in application order
    for i in 1..n {
        if i % 2 == 1 {
            for j in 0..i {
                // Null w[n-1-j, i-1-j] with columns (i-1-j, i-j).
                let row = n - 1 - j;
                let bond = i - 1 - j;
                let x = col_nulling(w[(row, bond)], w[(row, bond + 1)]);
                apply_cols(&mut w, bond, &x);
                right.push(AbstractGate { bond, matrix: x });
            }
        } else {
            for j in 1..=i {
                // Null w[n+j-i-1, j-1] with rows (n+j-i-2, n+j-i-1).
                let row = n + j - i - 1;
                let col = j - 1;
                let bond = row - 1;
                let rot = row_nulling(w[(bond, col)], w[(row, col)]);
                apply_rows(&mut w, bond, &rot);
                left.push(AbstractGate { bond, matrix: rot.adjoint() });
            }
        }
    }
    let mut diag: Vec<C64> = (0..n).map(|i| w[(i, i)]).collect();
    // W = (left factors, in order) D (right factors adjoint, reversed).
    // Push D through the right-side factors so it ends up last.
    let mut gates = left;
    for x in right.iter().rev() {
        let b = x.bond;
        let g = x.matrix.adjoint();
        let scaled = Matrix2::new(
            diag[b] * g[(0, 0)],
            diag[b] * g[(0, 1)],
            diag[b + 1] * g[(1, 0)],
            diag[b + 1] * g[(1, 1)],
        );
        diag[b] = c64(1.0, 0.0);
        diag[b + 1] = c64(1.0, 0.0);
        gates.push(AbstractGate { bond: b, matrix: scaled });
    }
    (gates, diag)
}

// ---------------------------------------------------------------------------
// Canonicalization into elements
// ---------------------------------------------------------------------------

/// Split a 2x2 unitary into the element form
/// `E(theta, phi) = [[e^{i phi} c, i e^{i phi} s], [i s, c]]` times a
/// diagonal phase pair: `g = E(theta, phi) diag(e^{i d1}, e^{i d2})`.
fn element_split(g: &Matrix2<C64>) -> (f64, f64, f64, f64) {
    let s = g[(1, 0)].norm();
    let c = g[(1, 1)].norm();
    let theta = s.atan2(c);
    let (phi, d1, d2);
    if s <= 1e-14 {
        d1 = g[(0, 0)].arg();
        d2 = g[(1, 1)].arg();
        phi = 0.0;
    } else if c <= 1e-14 {
        d1 = g[(1, 0)].arg() - std::f64::consts::FRAC_PI_2;
        d2 = 0.0;
        phi = g[(0, 1)].arg() - std::f64::consts::FRAC_PI_2;
    } else {
        d1 = g[(1, 0)].arg() - std::f64::consts::FRAC_PI_2;
        d2 = g[(1, 1)].arg();
        phi = g[(0, 0)].arg() - d1;
    }
    (theta, wrap_phase(phi), d1, d2)
}

fn wrap_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p = phi % tau;
    if p < 0.0 {
        p += tau;
    }
    p
}

/// Assign execution layers greedily: each element starts as early as its
/// site conflicts allow.
fn assign_layers(bonds: &[usize], n: usize) -> (Vec<usize>, usize) {
    let mut busy_until = vec![0usize; n];
    let mut layers = Vec::with_capacity(bonds.len());
    let mut depth = 0;
    for &b in bonds {
        let layer = busy_until[b].max(busy_until[b + 1]);
        layers.push(layer);
        busy_until[b] = layer + 1;
        busy_until[b + 1] = layer + 1;
        depth = depth.max(layer + 1);
    }
    (layers, depth)
}

/// Convert an abstract mesh into elements plus one final phase layer.
///
/// Returns the gate list with layers `layer0..` and the next free layer.
fn canonicalize_mesh(
    abstract_gates: Vec<AbstractGate>,
    diag: Vec<C64>,
    n: usize,
    layer0: usize,
) -> (Vec<GateSpec>, usize) {
    let mut pending: Vec<C64> = vec![c64(1.0, 0.0); n];
    let mut elements: Vec<(usize, f64, f64)> = Vec::with_capacity(abstract_gates.len());
    for g in abstract_gates {
        let b = g.bond;
        let eff = Matrix2::new(
            pending[b] * g.matrix[(0, 0)],
            pending[b] * g.matrix[(0, 1)],
            pending[b + 1] * g.matrix[(1, 0)],
            pending[b + 1] * g.matrix[(1, 1)],
        );
        let (theta, phi, d1, d2) = element_split(&eff);
        pending[b] = c64(0.0, d1).exp();
        pending[b + 1] = c64(0.0, d2).exp();
        elements.push((b, theta, phi));
    }
    let bonds: Vec<usize> = elements.iter().map(|e| e.0).collect();
    let (layers, depth) = assign_layers(&bonds, n);
    let mut gates: Vec<GateSpec> = elements
        .into_iter()
        .zip(layers)
        .map(|((b, theta, phi), l)| {
            GateSpec::two(GateKind::BeamSplitter { theta, phi }, b, layer0 + l)
        })
        .collect();
    // Final explicit phase-shifter layer.
    let phase_layer = layer0 + depth;
    for (site, (p, d)) in pending.iter().zip(diag.iter()).enumerate() {
        let phi = wrap_phase((p * d).arg());
        gates.push(GateSpec::one(GateKind::PhaseShifter { phi }, site, phase_layer));
    }
    (gates, phase_layer + 1)
}

fn check_unitary(u: &DMatrix<C64>) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotSquare { rows: u.nrows(), cols: u.ncols() });
    }
    let defect = unitarity_defect(u);
    if defect > tol::MESH_UNITARITY {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Decompose a unitary into a triangular nearest-neighbour mesh plus a final
/// phase layer. The ordered single-particle replay of the result equals `U`.
pub fn reck_decompose(u: &DMatrix<C64>) -> Result<Vec<GateSpec>> {
    check_unitary(u)?;
    let (gates, diag) = reck_abstract(u);
    let (specs, _) = canonicalize_mesh(gates, diag, u.nrows(), 0);
    Ok(specs)
}

/// As [`reck_decompose`], with a rectangular mesh of depth N.
pub fn clements_decompose(u: &DMatrix<C64>) -> Result<Vec<GateSpec>> {
    check_unitary(u)?;
    let (gates, diag) = clements_abstract(u);
    let (specs, _) = canonicalize_mesh(gates, diag, u.nrows(), 0);
    Ok(specs)
}

// ---------------------------------------------------------------------------
// Single-particle replay
// ---------------------------------------------------------------------------

/// Single-particle matrix of one gate on the doubled space, embedded at its
/// sites; the defining relation is `G^dag a G = sp(G) a`.
pub fn gate_doubled_action(gate: &GateSpec, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::identity(2 * n, 2 * n);
    match gate.kind {
        GateKind::BeamSplitter { theta, phi } => {
            let i = gate.sites[0];
            let j = gate.sites[1];
            let (c, s) = (theta.cos(), theta.sin());
            let e = c64(0.0, phi).exp();
            // E = P_i(phi) then B(theta) on the annihilation block; conjugate
            // block on the creation half.
            let block = [
                [e * c, c64(0.0, s) * e],
                [c64(0.0, s), c64(c, 0.0)],
            ];
            for (r, row) in [i, j].into_iter().enumerate() {
                for (q, col) in [i, j].into_iter().enumerate() {
                    m[(row, col)] = block[r][q];
                    m[(n + row, n + col)] = block[r][q].conj();
                }
            }
            m[(i, i + n)] = c64(0.0, 0.0);
        }
        GateKind::PhaseShifter { phi } => {
            let i = gate.sites[0];
            m[(i, i)] = c64(0.0, phi).exp();
            m[(n + i, n + i)] = c64(0.0, -phi).exp();
        }
        GateKind::SqueezeSingle { z } => {
            let i = gate.sites[0];
            m[(i, i)] = c64(z.cosh(), 0.0);
            m[(i, n + i)] = c64(-z.sinh(), 0.0);
            m[(n + i, i)] = c64(-z.sinh(), 0.0);
            m[(n + i, n + i)] = c64(z.cosh(), 0.0);
        }
        GateKind::SqueezePair { theta } => {
            let i = gate.sites[0];
            let j = gate.sites[1];
            let (c, s) = (theta.cos(), theta.sin());
            m[(i, i)] = c64(c, 0.0);
            m[(j, j)] = c64(c, 0.0);
            m[(n + i, n + i)] = c64(c, 0.0);
            m[(n + j, n + j)] = c64(c, 0.0);
            m[(i, n + j)] = c64(s, 0.0);
            m[(j, n + i)] = c64(-s, 0.0);
            m[(n + i, j)] = c64(s, 0.0);
            m[(n + j, i)] = c64(-s, 0.0);
        }
        GateKind::SwapMode => {
            // x = f_k + f_k^dag: swaps the mode's ladder operators and flips
            // the sign of every other mode (Majorana anticommutation).
            let k = gate.sites[0];
            for jj in 0..n {
                if jj != k {
                    m[(jj, jj)] = c64(-1.0, 0.0);
                    m[(n + jj, n + jj)] = c64(-1.0, 0.0);
                }
            }
            m[(k, k)] = c64(0.0, 0.0);
            m[(n + k, n + k)] = c64(0.0, 0.0);
            m[(k, n + k)] = c64(1.0, 0.0);
            m[(n + k, k)] = c64(1.0, 0.0);
        }
        GateKind::IdentityMode => {}
    }
    m
}

/// Ordered product of the gates' single-particle matrices (first applied
/// leftmost).
pub fn replay_doubled(gates: &[GateSpec], n: usize) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::identity(2 * n, 2 * n);
    for g in gates {
        acc = acc * gate_doubled_action(g, n);
    }
    acc
}

/// As [`replay_doubled`] restricted to a passive gate list: N x N product of
/// annihilation-block actions.
pub fn replay_passive(gates: &[GateSpec], n: usize) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::identity(n, n);
    for g in gates {
        let mut m = DMatrix::<C64>::identity(n, n);
        match g.kind {
            GateKind::BeamSplitter { theta, phi } => {
                let (i, j) = (g.sites[0], g.sites[1]);
                let (c, s) = (theta.cos(), theta.sin());
                let e = c64(0.0, phi).exp();
                m[(i, i)] = e * c;
                m[(i, j)] = c64(0.0, s) * e;
                m[(j, i)] = c64(0.0, s);
                m[(j, j)] = c64(c, 0.0);
            }
            GateKind::PhaseShifter { phi } => {
                m[(g.sites[0], g.sites[0])] = c64(0.0, phi).exp();
            }
            GateKind::IdentityMode => {}
            _ => panic!("replay_passive on a non-passive gate"),
        }
        acc = acc * m;
    }
    acc
}

// ---------------------------------------------------------------------------
// Full circuit synthesis
// ---------------------------------------------------------------------------

/// Compile Bloch-Messiah factors into an ordered gate plan mapping the
/// normal-mode product state to the interacting thermal state.
///
/// In single-particle terms the three chunks multiply (in application
/// order) to `U S_bar V^dag = T`, which makes the applied operator product
/// `T_hat^dag`. For the Reck mesh the orientation is chosen so the most
/// populated input sites meet the fewest elements; `populations` are the
/// per-normal-mode mean occupations.
pub fn synthesize_circuit(
    factors: &BlochMessiahFactors,
    decomposition: Decomposition,
    populations: &[f64],
) -> Result<CircuitPlan> {
    let n = factors.n_modes;
    if populations.len() != n {
        return Err(Error::ShapeMismatch {
            context: format!("populations has {} entries, expected {n}", populations.len()),
        });
    }
    let mirror = decomposition == Decomposition::Reck && mirror_pays_off(populations);

    let chunk = |target: &DMatrix<C64>, layer0: usize| -> Result<(Vec<GateSpec>, usize)> {
        check_unitary(target)?;
        let (gates, diag) = match (decomposition, mirror) {
            (Decomposition::Reck, false) => reck_abstract(target),
            (Decomposition::Reck, true) => {
                let refl = reflect(target);
                let (gates, diag) = reck_abstract(&refl);
                (reflect_gates(gates, n), diag.into_iter().rev().collect())
            }
            (Decomposition::Clements, _) => clements_abstract(target),
        };
        Ok(canonicalize_mesh(gates, diag, n, layer0))
    };

    // Chunk 1: replay must equal U (the annihilation block of U_bar).
    let (mut gates, mut next_layer) = chunk(&factors.u, 0)?;

    // Chunk 2: squeeze layer with single-particle action S_bar.
    next_layer = push_squeeze_gates(&mut gates, factors, next_layer);

    // Chunk 3: replay must equal V^dag.
    let (tail, last) = chunk(&factors.v.adjoint(), next_layer)?;
    gates.extend(tail);
    let _ = last;

    let plan = CircuitPlan {
        species: factors.species,
        n_modes: n,
        gates,
        direction: PlanDirection::InverseNormalMode,
    };
    verify_plan(&plan, factors)?;
    Ok(plan)
}

/// Weighted element count per input site, standard vs mirrored triangle.
/// Standard orientation: site s meets 2s+1 elements (site 0 the fewest).
fn mirror_pays_off(populations: &[f64]) -> bool {
    let n = populations.len();
    let weight = |site: usize| (2 * site + 1).min(2 * n - 1 - 2 * site + 2 * site)..; // placeholder
    let _ = weight;
    let mut std_cost = 0.0;
    let mut mir_cost = 0.0;
    for (s, &p) in populations.iter().enumerate() {
        let elements_std = if s == 0 { 1 } else { (2 * s + 1).min(2 * (n - 1)) };
        let m = n - 1 - s;
        let elements_mir = if m == 0 { 1 } else { (2 * m + 1).min(2 * (n - 1)) };
        std_cost += p * elements_std as f64;
        mir_cost += p * elements_mir as f64;
    }
    mir_cost + 1e-12 < std_cost
}

fn reflect(u: &DMatrix<C64>) -> DMatrix<C64> {
    let n = u.nrows();
    DMatrix::from_fn(n, n, |i, j| u[(n - 1 - i, n - 1 - j)])
}

fn reflect_gates(gates: Vec<AbstractGate>, n: usize) -> Vec<AbstractGate> {
    gates
        .into_iter()
        .map(|g| AbstractGate {
            bond: n - 2 - g.bond,
            matrix: Matrix2::new(
                g.matrix[(1, 1)],
                g.matrix[(1, 0)],
                g.matrix[(0, 1)],
                g.matrix[(0, 0)],
            ),
        })
        .collect()
}

/// Emit the squeeze-layer gates. Returns the next free layer.
fn push_squeeze_gates(
    gates: &mut Vec<GateSpec>,
    factors: &BlochMessiahFactors,
    layer0: usize,
) -> usize {
    match &factors.squeeze {
        SqueezeSpec::Bosonic(thetas) => {
            // sp(S(z)) carries -sinh(z) off-diagonals; realizing the S_bar
            // block (+sinh theta) therefore takes z = -theta.
            let mut used = false;
            for (k, &theta) in thetas.iter().enumerate() {
                if theta != 0.0 {
                    gates.push(GateSpec::one(GateKind::SqueezeSingle { z: -theta }, k, layer0));
                    used = true;
                }
            }
            layer0 + usize::from(used)
        }
        SqueezeSpec::Fermionic(entries) => {
            let mut used = false;
            let mut swap_modes: Vec<usize> = Vec::new();
            for e in entries {
                match *e {
                    FermiSqueezeEntry::Identity { .. } => {}
                    FermiSqueezeEntry::Pair { mode_a, mode_b, theta } => {
                        debug_assert_eq!(mode_b, mode_a + 1);
                        // Same sign flip as the bosonic case: the gate's
                        // single-particle rotation is inverse to S_bar's.
                        gates.push(GateSpec::two(
                            GateKind::SqueezePair { theta: -theta },
                            mode_a,
                            layer0,
                        ));
                        used = true;
                    }
                    FermiSqueezeEntry::Swap { mode } => {
                        gates.push(GateSpec::one(GateKind::SwapMode, mode, layer0));
                        swap_modes.push(mode);
                        used = true;
                    }
                }
            }
            let mut next = layer0 + usize::from(used);
            if !swap_modes.is_empty() {
                // A single swap flips the sign of every other mode's ladder
                // operators; pi phase shifters repair the residual signs so
                // the layer's action is exactly S_bar^-1.
                let pi = std::f64::consts::PI;
                let targets: Vec<usize> = if swap_modes.len() % 2 == 0 {
                    swap_modes.clone()
                } else {
                    (0..factors.n_modes).filter(|m| !swap_modes.contains(m)).collect()
                };
                if !targets.is_empty() {
                    for m in targets {
                        gates.push(GateSpec::one(GateKind::PhaseShifter { phi: pi }, m, next));
                    }
                    next += 1;
                }
            }
            next
        }
    }
}

fn verify_plan(plan: &CircuitPlan, factors: &BlochMessiahFactors) -> Result<()> {
    let n = plan.n_modes;
    let replay = replay_doubled(&plan.gates, n);
    let target = factors.reconstruct();
    let defect = frobenius(&(&replay - &target)) / frobenius(&target).max(1.0);
    if defect > 1e-9 {
        return Err(Error::DecompositionDefect { relation: "circuit replay", defect });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch_messiah::bloch_messiah;
    use crate::gaussian::NormalModeDecomposition;
    use crate::random::{haar_unitary, rng};
    use nalgebra::DVector;

    #[test]
    fn identity_decomposes_to_zero_angles() {
        for n in 2..=5 {
            let u = DMatrix::<C64>::identity(n, n);
            for gates in [reck_decompose(&u).unwrap(), clements_decompose(&u).unwrap()] {
                for g in &gates {
                    match g.kind {
                        GateKind::BeamSplitter { theta, phi } => {
                            assert!(theta.abs() < 1e-14 && phi.abs() < 1e-14);
                        }
                        GateKind::PhaseShifter { phi } => assert!(phi.abs() < 1e-14),
                        _ => panic!("unexpected gate kind"),
                    }
                }
            }
        }
    }

    #[test]
    fn reck_depth_is_2n_minus_3() {
        let mut r = rng(53);
        for n in 2..=8 {
            let u = haar_unitary(n, &mut r);
            let gates = reck_decompose(&u).unwrap();
            assert_eq!(depth_of(&gates), 2 * n - 3, "n = {n}");
            let count = gates
                .iter()
                .filter(|g| matches!(g.kind, GateKind::BeamSplitter { .. }))
                .count();
            assert_eq!(count, n * (n - 1) / 2);
        }
    }

    #[test]
    fn clements_depth_is_n() {
        let mut r = rng(59);
        for n in 2..=8 {
            let u = haar_unitary(n, &mut r);
            let gates = clements_decompose(&u).unwrap();
            // N = 2 is degenerate: a two-mode mesh holds a single element.
            let want = n.min(n * (n - 1) / 2);
            assert_eq!(depth_of(&gates), want, "n = {n}");
        }
    }

    #[test]
    fn haar_roundtrip_both_meshes() {
        let mut r = rng(61);
        for n in 2..=6 {
            for _ in 0..10 {
                let u = haar_unitary(n, &mut r);
                let reck = reck_decompose(&u).unwrap();
                let clem = clements_decompose(&u).unwrap();
                let d1 = frobenius(&(replay_passive(&reck, n) - &u));
                let d2 = frobenius(&(replay_passive(&clem, n) - &u));
                assert!(d1 < 1e-12, "reck n={n}: {d1:.3e}");
                assert!(d2 < 1e-12, "clements n={n}: {d2:.3e}");
            }
        }
    }

    #[test]
    fn non_unitary_input_rejected() {
        let m = DMatrix::<C64>::from_element(3, 3, c64(0.5, 0.0));
        assert!(matches!(reck_decompose(&m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn reck_shallow_arm_is_site_zero() {
        let mut r = rng(67);
        let n = 5;
        let u = haar_unitary(n, &mut r);
        let gates = reck_decompose(&u).unwrap();
        let touches = |site: usize| {
            gates
                .iter()
                .filter(|g| {
                    matches!(g.kind, GateKind::BeamSplitter { .. }) && g.sites.contains(&site)
                })
                .count()
        };
        assert_eq!(touches(0), 1);
        assert_eq!(touches(n - 1), n - 1);
    }

    fn nmd_from_t(species: Species, n: usize, t: DMatrix<C64>) -> NormalModeDecomposition {
        NormalModeDecomposition { species, n_modes: n, t, d: DVector::from_element(n, 1.0) }
    }

    #[test]
    fn bosonic_plan_replays_t_inverse() {
        let mut r = rng(71);
        for n in 1..=5 {
            let u = haar_unitary(n, &mut r);
            let v = haar_unitary(n, &mut r);
            let thetas: Vec<f64> =
                (0..n).map(|_| rand::Rng::gen_range(&mut r, 0.2..1.0)).collect();
            let t = crate::bloch_messiah::forward::bosonic_bogoliubov(&u, &thetas, &v);
            let nmd = nmd_from_t(Species::Bosonic, n, t.clone());
            let f = bloch_messiah(&nmd).unwrap();
            let pops: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
            for decomp in [Decomposition::Reck, Decomposition::Clements] {
                let plan = synthesize_circuit(&f, decomp, &pops).unwrap();
                let replay = replay_doubled(&plan.gates, n);
                let defect = frobenius(&(&replay - &t));
                assert!(defect < 1e-9, "{decomp} n={n}: defect {defect:.3e}");
                // Exactly n single-mode squeezers for a fully active T.
                let squeezers = plan
                    .gates
                    .iter()
                    .filter(|g| matches!(g.kind, GateKind::SqueezeSingle { .. }))
                    .count();
                assert_eq!(squeezers, n);
            }
        }
    }

    #[test]
    fn passive_plan_has_no_squeeze_gates() {
        let mut r = rng(73);
        let n = 4;
        let g = haar_unitary(n, &mut r);
        let t = crate::bloch_messiah::passive_doubled(&g);
        let nmd = nmd_from_t(Species::Bosonic, n, t);
        let f = bloch_messiah(&nmd).unwrap();
        let pops = vec![0.5; n];
        let plan = synthesize_circuit(&f, Decomposition::Reck, &pops).unwrap();
        assert!(plan.gates.iter().all(|g| !matches!(
            g.kind,
            GateKind::SqueezeSingle { .. } | GateKind::SqueezePair { .. } | GateKind::SwapMode
        )));
    }

    #[test]
    fn fermionic_plan_replays_t_inverse() {
        let mut r = rng(79);
        let n = 4;
        for entries in [
            vec![
                FermiSqueezeEntry::Pair { mode_a: 0, mode_b: 1, theta: 0.4 },
                FermiSqueezeEntry::Identity { mode: 2 },
                FermiSqueezeEntry::Identity { mode: 3 },
            ],
            vec![
                FermiSqueezeEntry::Pair { mode_a: 0, mode_b: 1, theta: 0.8 },
                FermiSqueezeEntry::Swap { mode: 2 },
                FermiSqueezeEntry::Swap { mode: 3 },
            ],
            vec![
                FermiSqueezeEntry::Identity { mode: 0 },
                FermiSqueezeEntry::Identity { mode: 1 },
                FermiSqueezeEntry::Identity { mode: 2 },
                FermiSqueezeEntry::Swap { mode: 3 },
            ],
        ] {
            let u = haar_unitary(n, &mut r);
            let v = haar_unitary(n, &mut r);
            let t = crate::bloch_messiah::forward::fermionic_bogoliubov(&u, &entries, &v);
            let nmd = nmd_from_t(Species::Fermionic, n, t.clone());
            let f = bloch_messiah(&nmd).unwrap();
            let pops: Vec<f64> = (0..n).map(|i| 0.5 - 0.1 * i as f64).collect();
            let plan = synthesize_circuit(&f, Decomposition::Reck, &pops).unwrap();
            let replay = replay_doubled(&plan.gates, n);
            let defect = frobenius(&(&replay - &t));
            assert!(defect < 1e-9, "defect {defect:.3e}");
        }
    }

    #[test]
    fn fermionic_pair_plan_counts_one_pair_gate() {
        // Two paired + two blocked(identity) modes: exactly one squeeze_pair
        // on adjacent sites.
        let mut r = rng(83);
        let n = 4;
        let u = haar_unitary(n, &mut r);
        let v = haar_unitary(n, &mut r);
        let entries = vec![
            FermiSqueezeEntry::Identity { mode: 0 },
            FermiSqueezeEntry::Identity { mode: 1 },
            FermiSqueezeEntry::Pair { mode_a: 2, mode_b: 3, theta: 0.3 },
        ];
        let t = crate::bloch_messiah::forward::fermionic_bogoliubov(&u, &entries, &v);
        let nmd = nmd_from_t(Species::Fermionic, n, t);
        let f = bloch_messiah(&nmd).unwrap();
        let plan =
            synthesize_circuit(&f, Decomposition::Reck, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        let pairs: Vec<&GateSpec> = plan
            .gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::SqueezePair { .. }))
            .collect();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].sites[1], pairs[0].sites[0] + 1);
    }

    #[test]
    fn layers_have_disjoint_sites() {
        let mut r = rng(89);
        let n = 6;
        let u = haar_unitary(n, &mut r);
        for gates in [reck_decompose(&u).unwrap(), clements_decompose(&u).unwrap()] {
            let max_layer = gates.iter().map(|g| g.layer).max().unwrap();
            for layer in 0..=max_layer {
                let mut seen = vec![false; n];
                for g in gates.iter().filter(|g| g.layer == layer) {
                    for &s in &g.sites {
                        assert!(!seen[s], "site {s} reused in layer {layer}");
                        seen[s] = true;
                    }
                }
            }
        }
    }

    #[test]
    fn plan_serializes_to_json() {
        let mut r = rng(97);
        let u = haar_unitary(3, &mut r);
        let t = crate::bloch_messiah::passive_doubled(&u);
        let nmd = nmd_from_t(Species::Bosonic, 3, t);
        let f = bloch_messiah(&nmd).unwrap();
        let plan = synthesize_circuit(&f, Decomposition::Clements, &[0.3, 0.2, 0.1]).unwrap();
        let json = plan.to_json().unwrap();
        let back: CircuitPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back.gates.len(), plan.gates.len());
    }
}
