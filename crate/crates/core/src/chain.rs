//! TEDOPA chain mapping: nearest-neighbour chain frequencies and couplings
//! from a spectral density via the three-term recurrence coefficients of its
//! orthogonal polynomials.
//!
//! Coefficients are computed with a discretized Stieltjes procedure over a
//! composite Gauss-Legendre grid; the grid order is doubled until the
//! coefficients are stable.

use nalgebra::DMatrix;

use crate::gaussian::{build_hamilton_matrix, HamiltonMatrix, Species};
use crate::linalg::{c64, gauss_legendre};
use crate::{Error, Result};

/// Spectral density on a finite support.
#[derive(Debug, Clone)]
pub enum SpectralDensity {
    /// `J(w) = w exp(-w / omega_c)` on `[0, 40 omega_c]`; the hard cutoff
    /// puts the density below 1e-14 at the edge.
    Ohmic { omega_c: f64 },
    /// Tabulated non-negative density on `[support_min, support_max]`,
    /// linearly interpolated.
    Tabulated { points: Vec<(f64, f64)> },
}

impl SpectralDensity {
    pub fn ohmic(omega_c: f64) -> Result<Self> {
        if !(omega_c > 0.0) {
            return Err(Error::InvalidConfig { context: format!("omega_c = {omega_c}") });
        }
        Ok(SpectralDensity::Ohmic { omega_c })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            SpectralDensity::Ohmic { omega_c } => (0.0, 40.0 * omega_c),
            SpectralDensity::Tabulated { points } => {
                (points.first().map(|p| p.0).unwrap_or(0.0),
                 points.last().map(|p| p.0).unwrap_or(1.0))
            }
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self {
            SpectralDensity::Ohmic { omega_c } => {
                if w < 0.0 {
                    0.0
                } else {
                    w * (-w / omega_c).exp()
                }
            }
            SpectralDensity::Tabulated { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                match points.binary_search_by(|p| p.0.partial_cmp(&w).unwrap()) {
                    Ok(i) => points[i].1,
                    Err(0) => 0.0,
                    Err(i) if i == points.len() => 0.0,
                    Err(i) => {
                        let (x0, y0) = points[i - 1];
                        let (x1, y1) = points[i];
                        y0 + (y1 - y0) * (w - x0) / (x1 - x0)
                    }
                }
            }
        }
    }
}

/// Chain frequencies and couplings. `ts[0]` is the system coupling
/// `sqrt(integral J / pi)`; `ts[1..]` couple adjacent chain sites.
#[derive(Debug, Clone)]
pub struct ChainCoefficients {
    pub omegas: Vec<f64>,
    pub ts: Vec<f64>,
}

/// Recurrence coefficients by the Stieltjes procedure on a fixed composite
/// quadrature grid (`panels` panels of `order`-point Gauss-Legendre).
fn stieltjes(sd: &SpectralDensity, n: usize, panels: usize, order: usize) -> ChainCoefficients {
    let (lo, hi) = sd.support();
    let (nodes, weights) = gauss_legendre(order);
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    let width = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let xx = a + 0.5 * width * (x + 1.0);
            xs.push(xx);
            ws.push(0.5 * width * w * sd.eval(xx));
        }
    }
    let m = xs.len();
    let mut p_prev = vec![0.0f64; m];
    let mut p_cur = vec![1.0f64; m];
    let mut omegas = Vec::with_capacity(n);
    let mut bs = Vec::with_capacity(n);
    let mut norm_prev = 1.0f64;
    for k in 0..n {
        let norm: f64 = (0..m).map(|i| ws[i] * p_cur[i] * p_cur[i]).sum();
        let a_k: f64 = (0..m).map(|i| ws[i] * xs[i] * p_cur[i] * p_cur[i]).sum::<f64>() / norm;
        let b_k = if k == 0 { ws.iter().sum::<f64>() } else { norm / norm_prev };
        omegas.push(a_k);
        bs.push(b_k);
        // Monic three-term recurrence: p_{k+1} = (x - a_k) p_k - b_k p_{k-1}
        // with b_k = norm_k / norm_{k-1} (b_0 multiplies p_{-1} = 0).
        let mut p_next = vec![0.0f64; m];
        for i in 0..m {
            p_next[i] = (xs[i] - a_k) * p_cur[i]
                - if k > 0 { norm / norm_prev } else { 0.0 } * p_prev[i];
        }
        p_prev = std::mem::take(&mut p_cur);
        p_cur = p_next;
        norm_prev = norm;
    }
    let ts = bs
        .iter()
        .enumerate()
        .map(|(k, &b)| if k == 0 { (b / std::f64::consts::PI).sqrt() } else { b.sqrt() })
        .collect();
    ChainCoefficients { omegas, ts }
}

/// Chain coefficients of an Ohmic (or tabulated) density, adaptively
/// refining the quadrature until all requested coefficients are stable to
/// 1e-10 under doubling.
pub fn chain_coefficients(sd: &SpectralDensity, n: usize) -> Result<ChainCoefficients> {
    if n == 0 {
        return Err(Error::InvalidConfig { context: "chain length 0".into() });
    }
    let order = 24;
    let mut panels = (2 * n).max(64);
    let mut current = stieltjes(sd, n, panels, order);
    for _ in 0..6 {
        let refined = stieltjes(sd, n, panels * 2, order);
        let defect = current
            .omegas
            .iter()
            .zip(&refined.omegas)
            .map(|(a, b)| (a - b).abs())
            .chain(current.ts.iter().zip(&refined.ts).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if defect < 1e-10 {
            return Ok(refined);
        }
        panels *= 2;
        current = refined;
    }
    let refined = stieltjes(sd, n, panels * 2, order);
    let defect = current
        .omegas
        .iter()
        .zip(&refined.omegas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Err(Error::ChainNotConverged { defect })
}

/// Bath-only chain Hamiltonian: tridiagonal `alpha` with the first `n`
/// frequencies on the diagonal and couplings `ts[1..n]` off-diagonal,
/// `zeta = 0`. The system coupling `ts[0]` is excluded.
pub fn chain_hamiltonian(
    coeffs: &ChainCoefficients,
    n: usize,
    species: Species,
) -> Result<HamiltonMatrix> {
    if coeffs.omegas.len() < n || coeffs.ts.len() < n {
        return Err(Error::InvalidConfig {
            context: format!("chain coefficients shorter than N = {n}"),
        });
    }
    let alpha = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c64(coeffs.omegas[i], 0.0)
        } else if j == i + 1 {
            c64(coeffs.ts[j], 0.0)
        } else if i == j + 1 {
            c64(coeffs.ts[i], 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    build_hamilton_matrix(species, alpha, DMatrix::zeros(n, n))
}
