//! Dense linear-algebra helpers.
//!
//! MPO tensors are stored as `ndarray` arrays while factorizations (hermitian
//! eigendecomposition, SVD, QR) run on `nalgebra` matrices; this module owns
//! the conversions and a few structured decompositions that the Bloch-Messiah
//! routine needs.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex;

use crate::{C64, Error, Result};

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Convert an `ndarray` matrix into a `nalgebra` one.
pub fn to_nalgebra(a: &Array2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Convert a `nalgebra` matrix into an `ndarray` one.
pub fn to_ndarray(m: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative hermiticity defect ||m - m^dag||_F / max(1, ||m||_F).
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    frobenius(&(m - m.adjoint())) / frobenius(m).max(1.0)
}

/// Relative symmetry defect ||m - m^T||_F / max(1, ||m||_F).
pub fn symmetry_defect(m: &DMatrix<C64>) -> f64 {
    frobenius(&(m - m.transpose())) / frobenius(m).max(1.0)
}

/// Relative antisymmetry defect ||m + m^T||_F / max(1, ||m||_F).
pub fn antisymmetry_defect(m: &DMatrix<C64>) -> f64 {
    frobenius(&(m + m.transpose())) / frobenius(m).max(1.0)
}

pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    frobenius(&(m.adjoint() * m - DMatrix::<C64>::identity(n, n)))
}

// LAPACK hermitian eigensolver; `Complex<f64>` is layout-compatible with
// `complex*16`.
extern "C" {
    fn zheev_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
    fn zgeqrf_(
        m: *const i32,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        tau: *mut C64,
        work: *mut C64,
        lwork: *const i32,
        info: *mut i32,
    );
    fn zungqr_(
        m: *const i32,
        n: *const i32,
        k: *const i32,
        a: *mut C64,
        lda: *const i32,
        tau: *const C64,
        work: *mut C64,
        lwork: *const i32,
        info: *mut i32,
    );
    fn zgemm_(
        transa: *const u8,
        transb: *const u8,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const C64,
        a: *const C64,
        lda: *const i32,
        b: *const C64,
        ldb: *const i32,
        beta: *const C64,
        c: *mut C64,
        ldc: *const i32,
    );
    fn zgesvd_(
        jobu: *const u8,
        jobvt: *const u8,
        m: *const i32,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        s: *mut f64,
        u: *mut C64,
        ldu: *const i32,
        vt: *mut C64,
        ldvt: *const i32,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns, so
/// `m = V diag(w) V^dag`. Backed by LAPACK `zheev`, which stays accurate on
/// degenerate spectra.
pub fn eigh(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh requires a square matrix");
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    // nalgebra stores column-major, matching LAPACK.
    let mut a = m.clone();
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; (3 * n).max(1)];
    let n_i = n as i32;
    let mut info: i32 = 0;
    // Workspace query, then the real call.
    let mut work_query = [c64(0.0, 0.0); 1];
    let query: i32 = -1;
    unsafe {
        zheev_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    let lwork = (work_query[0].re as i32).max(2 * n_i - 1).max(1);
    let mut work = vec![c64(0.0, 0.0); lwork as usize];
    unsafe {
        zheev_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    assert_eq!(info, 0, "zheev failed with info = {info}");
    (DVector::from_vec(w), a)
}

/// SVD with singular values sorted descending: `m = u diag(s) v^dag`.
///
/// Returns `(u, s, v)` (note: `v`, not `v^dag`). Backed by LAPACK `zgesvd`;
/// the factors stay orthonormal across degenerate and vanishing singular
/// values.
pub fn svd(m: &DMatrix<C64>) -> (DMatrix<C64>, DVector<f64>, DMatrix<C64>) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (DMatrix::zeros(rows, 0), DVector::zeros(0), DMatrix::zeros(cols, 0));
    }
    let mut a = m.clone();
    let mut s = vec![0.0f64; k];
    let mut u = DMatrix::<C64>::zeros(rows, k);
    let mut vt = DMatrix::<C64>::zeros(k, cols);
    let (m_i, n_i, k_i) = (rows as i32, cols as i32, k as i32);
    let mut rwork = vec![0.0f64; 5 * k];
    let mut info: i32 = 0;
    let mut work_query = [c64(0.0, 0.0); 1];
    let query: i32 = -1;
    unsafe {
        zgesvd_(
            b"S".as_ptr(),
            b"S".as_ptr(),
            &m_i,
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &m_i,
            s.as_mut_ptr(),
            u.as_mut_slice().as_mut_ptr(),
            &m_i,
            vt.as_mut_slice().as_mut_ptr(),
            &k_i,
            work_query.as_mut_ptr(),
            &query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    let lwork = (work_query[0].re as i32).max(2 * k_i + rows.max(cols) as i32).max(1);
    let mut work = vec![c64(0.0, 0.0); lwork as usize];
    unsafe {
        zgesvd_(
            b"S".as_ptr(),
            b"S".as_ptr(),
            &m_i,
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &m_i,
            s.as_mut_ptr(),
            u.as_mut_slice().as_mut_ptr(),
            &m_i,
            vt.as_mut_slice().as_mut_ptr(),
            &k_i,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    assert_eq!(info, 0, "zgesvd failed with info = {info}");
    (u, DVector::from_vec(s), vt.adjoint())
}

/// BLAS-backed product of two (column-major) matrices.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "matmul inner dimensions");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let (m_i, n_i, k_i) = (m as i32, n as i32, k as i32);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    unsafe {
        zgemm_(
            b"N".as_ptr(),
            b"N".as_ptr(),
            &m_i,
            &n_i,
            &k_i,
            &one,
            a.as_slice().as_ptr(),
            &m_i,
            b.as_slice().as_ptr(),
            &k_i,
            &zero,
            c.as_mut_slice().as_mut_ptr(),
            &m_i,
        );
    }
    c
}

/// BLAS-backed product of two row-major `ndarray` matrices.
pub fn matmul_nd(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul inner dimensions");
    let mut c = Array2::<C64>::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let a_std = a.as_standard_layout();
    let b_std = b.as_standard_layout();
    // Row-major C = A B is column-major C^T = B^T A^T on the same buffers.
    let (m_i, n_i, k_i) = (m as i32, n as i32, k as i32);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    unsafe {
        zgemm_(
            b"N".as_ptr(),
            b"N".as_ptr(),
            &n_i,
            &m_i,
            &k_i,
            &one,
            b_std.as_ptr(),
            &n_i,
            a_std.as_ptr(),
            &k_i,
            &zero,
            c.as_mut_ptr(),
            &n_i,
        );
    }
    c
}

/// Thin QR decomposition: `m = q r` with `q` having orthonormal columns.
/// Backed by LAPACK `zgeqrf`/`zungqr`.
pub fn qr_thin(m: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (DMatrix::zeros(rows, 0), DMatrix::zeros(0, cols));
    }
    let mut a = m.clone();
    let mut tau = vec![c64(0.0, 0.0); k];
    let (m_i, n_i, k_i) = (rows as i32, cols as i32, k as i32);
    let mut info: i32 = 0;
    let mut work_query = [c64(0.0, 0.0); 1];
    let query: i32 = -1;
    unsafe {
        zgeqrf_(
            &m_i,
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &m_i,
            tau.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    let lwork = (work_query[0].re as i32).max(n_i).max(1);
    let mut work = vec![c64(0.0, 0.0); lwork as usize];
    unsafe {
        zgeqrf_(
            &m_i,
            &n_i,
            a.as_mut_slice().as_mut_ptr(),
            &m_i,
            tau.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    assert_eq!(info, 0, "zgeqrf failed with info = {info}");
    let mut r = DMatrix::<C64>::zeros(k, cols);
    for i in 0..k {
        for j in i..cols {
            r[(i, j)] = a[(i, j)];
        }
    }
    // First k reflectors generate the thin Q in place.
    let mut q = DMatrix::<C64>::zeros(rows, k);
    for j in 0..k.min(cols) {
        for i in 0..rows {
            q[(i, j)] = a[(i, j)];
        }
    }
    unsafe {
        zungqr_(
            &m_i,
            &k_i,
            &k_i,
            q.as_mut_slice().as_mut_ptr(),
            &m_i,
            tau.as_ptr(),
            work_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    let lwork2 = (work_query[0].re as i32).max(k_i).max(1);
    let mut work2 = vec![c64(0.0, 0.0); lwork2 as usize];
    unsafe {
        zungqr_(
            &m_i,
            &k_i,
            &k_i,
            q.as_mut_slice().as_mut_ptr(),
            &m_i,
            tau.as_ptr(),
            work2.as_mut_ptr(),
            &lwork2,
            &mut info,
        );
    }
    assert_eq!(info, 0, "zungqr failed with info = {info}");
    (q, r)
}

/// Exponential `V diag(f(w)) V^dag` of a hermitian matrix `h = V diag(w) V^dag`.
///
/// Every matrix exponential in this crate is of the form `exp(z h)` with `h`
/// hermitian (gates, Trotter factors, Gibbs weights), so the eigenbasis route
/// is exact up to rounding and needs no general expm.
pub fn exp_hermitian(h: &DMatrix<C64>, z: C64) -> DMatrix<C64> {
    let (w, v) = eigh(h);
    let n = h.nrows();
    let mut scaled = v.clone();
    for j in 0..n {
        let f = (z * w[j]).exp();
        for i in 0..n {
            scaled[(i, j)] *= f;
        }
    }
    matmul(&scaled, &v.adjoint())
}

/// Hermitian square root of a positive-definite matrix.
///
/// Eigenvalues at or below `rel_floor * max_eig` are an error, not clamped.
pub fn sqrt_positive(m: &DMatrix<C64>, rel_floor: f64) -> Result<DMatrix<C64>> {
    let (w, v) = eigh(m);
    let n = m.nrows();
    let max_eig = w.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let min_eig = w[0];
    if min_eig <= rel_floor * max_eig {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let mut scaled = v.clone();
    for j in 0..n {
        let f = w[j].sqrt();
        for i in 0..n {
            scaled[(i, j)] *= c64(f, 0.0);
        }
    }
    let root = scaled * v.adjoint();
    Ok(hermitize(&root))
}

/// Symmetrize a numerically hermitian matrix.
pub fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Takagi factorization `y = w w^T` of a unitary symmetric matrix.
///
/// Writes `y = r + i j` with commuting real symmetric `r`, `j`, diagonalizes
/// them simultaneously with a real orthogonal basis and takes half the phase
/// of each joint eigenvalue.
pub fn takagi_unitary_symmetric(y: &DMatrix<C64>) -> DMatrix<C64> {
    let n = y.nrows();
    let r = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (y[(i, j)].re + y[(j, i)].re));
    let jm = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (y[(i, j)].im + y[(j, i)].im));
    let o = simultaneous_diagonalize_commuting(&r, &jm);
    // Joint eigenvalues e^{i chi_k}; w = o diag(e^{i chi_k / 2}).
    let mut w = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let col = o.column(k);
        let mut lam_r = 0.0;
        let mut lam_j = 0.0;
        for i in 0..n {
            let mut rr = 0.0;
            let mut jj = 0.0;
            for l in 0..n {
                rr += r[(i, l)] * col[l];
                jj += jm[(i, l)] * col[l];
            }
            lam_r += col[i] * rr;
            lam_j += col[i] * jj;
        }
        let chi = lam_j.atan2(lam_r);
        let phase = c64(0.0, chi / 2.0).exp();
        for i in 0..n {
            w[(i, k)] = phase * c64(col[i], 0.0);
        }
    }
    w
}

/// Simultaneously diagonalize two commuting real symmetric matrices.
///
/// Diagonalizes `a`, then re-diagonalizes `b` restricted to each (nearly)
/// degenerate eigenspace of `a`.
fn simultaneous_diagonalize_commuting(
    a: &nalgebra::DMatrix<f64>,
    b: &nalgebra::DMatrix<f64>,
) -> nalgebra::DMatrix<f64> {
    let n = a.nrows();
    let ea = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| ea.eigenvalues[x].partial_cmp(&ea.eigenvalues[y]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| ea.eigenvalues[k]).collect();
    let mut basis = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| ea.eigenvectors[(i, order[j])]);

    let scale = vals.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[end - 1]).abs() <= tol {
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            let block = basis.columns(start, m).into_owned();
            let b_restricted = block.transpose() * b * &block;
            let eb = b_restricted.symmetric_eigen();
            let rotated = &block * eb.eigenvectors;
            basis.columns_mut(start, m).copy_from(&rotated);
        }
        start = end;
    }
    basis
}

/// Kramers pairing of a unitary antisymmetric matrix: returns unitary `w`
/// with `y = w J w^T` where `J` is block-diagonal with [[0, -1], [1, 0]].
///
/// The dimension must be even; otherwise no such pairing exists.
pub fn kramers_pairs_unitary_antisymmetric(y: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = y.nrows();
    if n % 2 != 0 {
        return Err(Error::DegeneratePairing {
            context: format!("antisymmetric unitary block of odd dimension {n}"),
        });
    }
    let mut w = DMatrix::<C64>::zeros(n, n);
    let mut filled = 0usize;
    while filled < n {
        // Deterministic seed: standard basis vector with the largest residual
        // after projecting out the pairs found so far.
        let mut best = 0;
        let mut best_norm = -1.0;
        for e in 0..n {
            let mut v = DVector::<C64>::zeros(n);
            v[e] = c64(1.0, 0.0);
            for k in 0..filled {
                let col = w.column(k);
                let ip: C64 = col.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                let col = col.into_owned();
                v -= col * ip;
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if norm > best_norm {
                best_norm = norm;
                best = e;
            }
        }
        let mut v = DVector::<C64>::zeros(n);
        v[best] = c64(1.0, 0.0);
        for k in 0..filled {
            let col = w.column(k);
            let ip: C64 = col.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            let col = col.into_owned();
            v -= col * ip;
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return Err(Error::DegeneratePairing {
                context: "could not extend Kramers basis".into(),
            });
        }
        v /= c64(norm, 0.0);
        // Partner: y v*; orthogonal to v by antisymmetry, unit by unitarity.
        let partner = y * v.map(|z| z.conj());
        for i in 0..n {
            w[(i, filled)] = v[i];
            w[(i, filled + 1)] = partner[i];
        }
        filled += 2;
    }
    Ok(w)
}

/// Columns of the identity re-ordered: `p[:, k] = e_{perm[k]}`, so that
/// right-multiplication gathers columns and `p^T m p` relabels indices.
pub fn permutation_matrix(perm: &[usize]) -> DMatrix<C64> {
    let n = perm.len();
    let mut p = DMatrix::<C64>::zeros(n, n);
    for (k, &src) in perm.iter().enumerate() {
        p[(src, k)] = c64(1.0, 0.0);
    }
    p
}

/// Nodes and weights of `n`-point Gauss-Legendre quadrature on [-1, 1],
/// via the Golub-Welsch eigenvalue method on the Jacobi matrix.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let off = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = off;
        jac[(k, k - 1)] = off;
    }
    let e = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (e.eigenvalues[i], 2.0 * e.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, rng};

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let mut r = rng(7);
        let u = haar_unitary(5, &mut r);
        let w0 = [-2.0, -0.5, 0.1, 0.1, 3.0];
        let d = DMatrix::from_fn(5, 5, |i, j| {
            if i == j { c64(w0[i], 0.0) } else { c64(0.0, 0.0) }
        });
        let h = &u * d * u.adjoint();
        let (w, v) = eigh(&h);
        for i in 0..5 {
            assert!((w[i] - w0[i]).abs() < 1e-10);
        }
        let recon = &v
            * DMatrix::from_fn(5, 5, |i, j| if i == j { c64(w[i], 0.0) } else { c64(0.0, 0.0) })
            * v.adjoint();
        assert!(frobenius(&(recon - h)) < 1e-10);
    }

    #[test]
    fn svd_is_descending_and_reconstructs() {
        let mut r = rng(11);
        let u = haar_unitary(4, &mut r);
        let v = haar_unitary(4, &mut r);
        let s0 = [3.0, 1.5, 0.2, 0.0];
        let d = DMatrix::from_fn(4, 4, |i, j| if i == j { c64(s0[i], 0.0) } else { c64(0.0, 0.0) });
        let m = &u * d * v.adjoint();
        let (uu, s, vv) = svd(&m);
        for i in 0..4 {
            assert!((s[i] - s0[i]).abs() < 1e-10, "s[{i}] = {}", s[i]);
        }
        let sd = DMatrix::from_fn(4, 4, |i, j| if i == j { c64(s[i], 0.0) } else { c64(0.0, 0.0) });
        assert!(frobenius(&(&uu * sd * vv.adjoint() - m)) < 1e-10);
    }

    #[test]
    fn qr_thin_orthonormal() {
        let mut r = rng(13);
        let m = crate::random::random_complex(6, 3, &mut r);
        let (q, rr) = qr_thin(&m);
        assert_eq!(q.shape(), (6, 3));
        assert!(unitarity_defect(&q) < 1e-12);
        assert!(frobenius(&(&q * rr - m)) < 1e-12);
    }

    #[test]
    fn takagi_of_unitary_symmetric() {
        let mut r = rng(17);
        // Build a unitary symmetric matrix as w0 w0^T.
        let w0 = haar_unitary(5, &mut r);
        let y = &w0 * w0.transpose();
        let w = takagi_unitary_symmetric(&y);
        assert!(unitarity_defect(&w) < 1e-10);
        assert!(frobenius(&(&w * w.transpose() - y)) < 1e-10);
    }

    #[test]
    fn kramers_pairing_of_antisymmetric_unitary() {
        let mut r = rng(19);
        let n = 6;
        let mut j = DMatrix::<C64>::zeros(n, n);
        for k in 0..n / 2 {
            j[(2 * k, 2 * k + 1)] = c64(-1.0, 0.0);
            j[(2 * k + 1, 2 * k)] = c64(1.0, 0.0);
        }
        let u = haar_unitary(n, &mut r);
        let y = &u * &j * u.transpose();
        let w = kramers_pairs_unitary_antisymmetric(&y).unwrap();
        assert!(unitarity_defect(&w) < 1e-10);
        assert!(frobenius(&(&w * &j * w.transpose() - y)) < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        // Degree-15 exactness: check x^14 over [-1, 1] = 2/15.
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((got - 2.0 / 15.0).abs() < 1e-12);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn exp_hermitian_matches_series() {
        let mut r = rng(23);
        let u = haar_unitary(3, &mut r);
        let d = DMatrix::from_fn(3, 3, |i, j| if i == j { c64(i as f64 - 1.0, 0.0) } else { c64(0.0, 0.0) });
        let h = &u * d * u.adjoint();
        let z = c64(0.0, 0.7);
        let e = exp_hermitian(&h, z);
        // Series oracle.
        let mut acc = DMatrix::<C64>::identity(3, 3);
        let mut term = DMatrix::<C64>::identity(3, 3);
        for k in 1..40 {
            term = (&term * &h).scale(1.0 / k as f64) * z;
            acc += &term;
        }
        assert!(frobenius(&(e - acc)) < 1e-12);
    }

    #[test]
    fn svd_degenerate_and_rank_deficient() {
        let mut r = rng(991);
        for trial in 0..120 {
            let n = 2 + trial % 5;
            let m = n + (trial % 3);
            let u0 = haar_unitary(m, &mut r);
            let v0 = haar_unitary(n, &mut r);
            let svals: Vec<f64> = (0..n)
                .map(|i| match trial % 3 {
                    0 => 0.95,                       // fully degenerate
                    1 => if i < n / 2 { 0.0 } else { 1.3 }, // rank deficient
                    _ => 0.2 + i as f64,
                })
                .collect();
            let mut d = DMatrix::<C64>::zeros(m, n);
            for i in 0..n {
                d[(i, i)] = c64(svals[i], 0.0);
            }
            let mat = &u0 * d * v0.adjoint();
            let (u, s, v) = svd(&mat);
            let mut sd = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                sd[(i, i)] = c64(s[i], 0.0);
            }
            let recon = &u * sd * v.adjoint();
            let defect = frobenius(&(recon - &mat));
            let orth = unitarity_defect(&u).max(unitarity_defect(&v));
            assert!(
                defect < 1e-12 && orth < 1e-12,
                "trial {trial}: recon {defect:.3e} orth {orth:.3e}"
            );
        }
    }

    #[test]
    fn eigh_degenerate_clusters() {
        let mut r = rng(1009);
        for trial in 0..40 {
            let n = 4 + trial % 8;
            let u0 = haar_unitary(n, &mut r);
            let mut d = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = c64(if i < n / 2 { -0.95 } else { 0.95 }, 0.0);
            }
            let h = &u0 * d * u0.adjoint();
            let (w, v) = eigh(&h);
            let mut dd = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                dd[(i, i)] = c64(w[i], 0.0);
            }
            let recon = &v * dd * v.adjoint();
            let defect = frobenius(&(recon - &h));
            assert!(defect < 1e-12, "trial {trial} n {n}: recon {defect:.3e}");
        }
    }
}
