//! Dense Fock-space oracle: exact thermal states and moments of truncated
//! second-quantized Hamiltonians, for verification at small system sizes.
//!
//! Basis ordering matches the MPO contraction: site 0 is the most
//! significant digit. Ladder operators are stored as column maps (each
//! column holds at most one nonzero), so composing them and assembling the
//! dense Hamiltonian is linear in the Hilbert-space dimension. Fermionic
//! operators carry their Jordan-Wigner signs.

use nalgebra::DMatrix;

use crate::gaussian::{HamiltonMatrix, Moments, Species, ThermalSpec};
use crate::linalg::{c64, eigh};
use crate::{C64, Error, Result};

/// Hard cap on the oracle dimension.
pub const DIM_CAP: usize = 1 << 14;

/// Truncated Fock space of `n_modes` sites with local dimension `m_local`
/// (forced to 2 for fermions).
#[derive(Debug, Clone, Copy)]
pub struct FockSpace {
    pub species: Species,
    pub n_modes: usize,
    pub m_local: usize,
    pub dim: usize,
}

impl FockSpace {
    pub fn new(species: Species, n_modes: usize, m_local: usize) -> Result<Self> {
        let m_local = match species {
            Species::Bosonic => m_local,
            Species::Fermionic => 2,
        };
        let mut dim: usize = 1;
        for _ in 0..n_modes {
            dim = dim.checked_mul(m_local).filter(|&d| d <= DIM_CAP).ok_or(
                Error::OracleDimension { dim: usize::MAX, cap: DIM_CAP },
            )?;
        }
        Ok(FockSpace { species, n_modes, m_local, dim })
    }

    /// Weight of one site digit in the basis index (site 0 most significant).
    fn place(&self, site: usize) -> usize {
        self.m_local.pow((self.n_modes - 1 - site) as u32)
    }

    fn digit(&self, index: usize, site: usize) -> usize {
        index / self.place(site) % self.m_local
    }

    fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.n_modes).map(|s| self.digit(index, s)).collect()
    }

    fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().enumerate().map(|(s, &n)| n * self.place(s)).sum()
    }

    /// Apply one ladder operator to a digit vector in place, allowing a
    /// transient overflow to digit `M` (needed so products of operators are
    /// the projection of the exact product, not the product of projections).
    /// Returns the amplitude factor, or `None` when annihilating vacuum.
    fn apply_ladder(&self, digits: &mut [usize], site: usize, create: bool) -> Option<f64> {
        let jw_sign = if self.species == Species::Fermionic {
            let parity: usize = digits[..site].iter().sum();
            if parity % 2 == 0 { 1.0 } else { -1.0 }
        } else {
            1.0
        };
        let n = digits[site];
        if create {
            if self.species == Species::Fermionic && n >= 1 {
                return None;
            }
            digits[site] = n + 1;
            Some(jw_sign * ((n + 1) as f64).sqrt())
        } else {
            if n == 0 {
                return None;
            }
            digits[site] = n - 1;
            Some(jw_sign * (n as f64).sqrt())
        }
    }

    fn in_space(&self, digits: &[usize]) -> bool {
        digits.iter().all(|&n| n < self.m_local)
    }

    fn ladder_target(&self, index: usize) -> (usize, bool) {
        if index < self.n_modes { (index, false) } else { (index - self.n_modes, true) }
    }

    /// Column map of a single ladder operator; `index < N` annihilates mode
    /// `index`, otherwise creates mode `index - N`.
    pub fn ladder(&self, index: usize) -> ColumnMap {
        let (site, create) = self.ladder_target(index);
        let mut cols = vec![None; self.dim];
        for (c, entry) in cols.iter_mut().enumerate() {
            let mut digits = self.digits(c);
            if let Some(amp) = self.apply_ladder(&mut digits, site, create) {
                if self.in_space(&digits) {
                    *entry = Some((self.index_of(&digits), c64(amp, 0.0)));
                }
            }
        }
        ColumnMap { cols }
    }

    /// Column map of the exact projected quadratic term `a_I^dag a_J`.
    pub fn quadratic(&self, i: usize, j: usize) -> ColumnMap {
        let (site_j, create_j) = self.ladder_target(j);
        // a_I^dag is the ladder with the swapped doubled index.
        let i_dag = if i < self.n_modes { i + self.n_modes } else { i - self.n_modes };
        let (site_i, create_i) = self.ladder_target(i_dag);
        let mut cols = vec![None; self.dim];
        for (c, entry) in cols.iter_mut().enumerate() {
            let mut digits = self.digits(c);
            let Some(a1) = self.apply_ladder(&mut digits, site_j, create_j) else { continue };
            let Some(a2) = self.apply_ladder(&mut digits, site_i, create_i) else { continue };
            if self.in_space(&digits) {
                *entry = Some((self.index_of(&digits), c64(a1 * a2, 0.0)));
            }
        }
        ColumnMap { cols }
    }

    /// Dense second-quantized Hamiltonian `sum_IJ H_IJ a_I^dag a_J` of the
    /// assembled Hamilton matrix; each quadratic term is the projection of
    /// the exact operator to the truncated space.
    pub fn hamiltonian(&self, h: &HamiltonMatrix) -> DMatrix<C64> {
        let n = self.n_modes;
        let hm = h.matrix();
        let mut out = DMatrix::<C64>::zeros(self.dim, self.dim);
        for i in 0..2 * n {
            for j in 0..2 * n {
                let w = hm[(i, j)];
                if w.norm() == 0.0 {
                    continue;
                }
                let quad = self.quadratic(i, j);
                for (c, entry) in quad.cols.iter().enumerate() {
                    if let Some((row, amp)) = entry {
                        out[(*row, c)] += w * amp;
                    }
                }
            }
        }
        out
    }

    /// Dense global number operator.
    pub fn number_operator(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r != c {
                return c64(0.0, 0.0);
            }
            let total: usize = (0..self.n_modes).map(|s| self.digit(c, s)).sum();
            c64(total as f64, 0.0)
        })
    }

    /// Moments of a dense state (normalized internally).
    pub fn moments(&self, rho: &DMatrix<C64>) -> Moments {
        let n = self.n_modes;
        let tr: C64 = (0..self.dim).map(|i| rho[(i, i)]).sum();
        let inv = c64(1.0, 0.0) / tr;
        let ladders: Vec<ColumnMap> = (0..2 * n).map(|i| self.ladder(i)).collect();
        let m = nalgebra::DVector::from_fn(2 * n, |i, _| {
            inv * trace_against(rho, &ladders[i])
        });
        let gamma = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            inv * trace_against(rho, &self.quadratic(i, j))
        });
        Moments { m, gamma }
    }
}

/// Sparse operator with at most one entry per column.
pub struct ColumnMap {
    cols: Vec<Option<(usize, C64)>>,
}

/// `tr(rho . O)` for a column-map operator.
fn trace_against(rho: &DMatrix<C64>, op: &ColumnMap) -> C64 {
    let mut acc = c64(0.0, 0.0);
    for c in 0..rho.ncols() {
        if let Some((row, amp)) = op.cols[c] {
            acc += rho[(c, row)] * amp;
        }
    }
    acc
}

/// Dense thermal state `exp(-beta (H - mu N)) / Z` on the truncated space.
pub fn thermal_dense(
    space: &FockSpace,
    h: &HamiltonMatrix,
    spec: &ThermalSpec,
) -> DMatrix<C64> {
    let mut ham = space.hamiltonian(h);
    if spec.mu != 0.0 {
        ham -= space.number_operator().scale(spec.mu);
    }
    let (w, v) = eigh(&ham);
    let w0 = w[0];
    let dim = space.dim;
    let mut weights: Vec<f64> = (0..dim).map(|i| (-spec.beta * (w[i] - w0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    for x in weights.iter_mut() {
        *x /= z;
    }
    let mut scaled = v.clone();
    for j in 0..dim {
        for i in 0..dim {
            scaled[(i, j)] *= c64(weights[j], 0.0);
        }
    }
    crate::linalg::matmul(&scaled, &v.adjoint())
}

/// Trace distance `(1/2) ||a - b||_1` of two hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = crate::linalg::hermitize(&(a - b));
    let (w, _) = eigh(&diff);
    0.5 * w.iter().map(|x| x.abs()).sum::<f64>()
}
