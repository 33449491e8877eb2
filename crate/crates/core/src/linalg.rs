//! Thin safe wrappers over the LAPACK routines the crate needs.
//!
//! Dense matrices are column-major. Only the upper triangle of Hermitian
//! inputs is read.

use std::os::raw::c_char;

use lapack_sys::{__BindgenComplex, dstev_, dsyevd_, zgesvd_, zgetrf_, zheevd_, zheevr_};
use num_complex::Complex64;

use crate::error::{Error, Result};

type LapackComplex = __BindgenComplex<f64>;

/// Square complex matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_column_major(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong length");
        DenseMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.n + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[col * self.n + row] = v;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[col * self.n + row] += v;
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.n..(col + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.n {
            for r in 0..=c {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Eigenvalues (ascending) and eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column-major, `n` rows and `values.len()` columns.
    pub vectors: Vec<Complex64>,
    pub n: usize,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

fn lapack_info(routine: &str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{routine} returned info = {info}")))
    }
}

fn as_lapack(p: *mut Complex64) -> *mut LapackComplex {
    p as *mut LapackComplex
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &DenseMatrix) -> Result<Vec<f64>> {
    heevd(m, false).map(|e| e.values)
}

/// Full eigendecomposition of a Hermitian matrix (divide and conquer).
pub fn eigh(m: &DenseMatrix) -> Result<Eigen> {
    heevd(m, true)
}

fn heevd(m: &DenseMatrix, vectors: bool) -> Result<Eigen> {
    let n = m.n as i32;
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: vec![],
            n: 0,
        });
    }
    let mut a = m.data.clone();
    let mut w = vec![0.0; m.n];
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'U' as c_char;
    let mut info = 0;
    let mut work_q = Complex64::new(0.0, 0.0);
    let mut rwork_q = 0.0;
    let mut iwork_q = 0;
    // SAFETY: buffers sized per LAPACK's workspace query; `a` holds n*n entries.
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            w.as_mut_ptr(),
            as_lapack(&mut work_q),
            &-1,
            &mut rwork_q,
            &-1,
            &mut iwork_q,
            &-1,
            &mut info,
        );
    }
    lapack_info("zheevd (query)", info)?;
    let lwork = work_q.re as i32;
    let lrwork = rwork_q as i32;
    let liwork = iwork_q;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            w.as_mut_ptr(),
            as_lapack(work.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_info("zheevd", info)?;
    Ok(Eigen {
        values: w,
        vectors: if vectors { a } else { Vec::new() },
        n: m.n,
    })
}

/// Eigenpairs with ascending index in `lo..hi` (0-based, half open).
pub fn eigh_range(m: &DenseMatrix, lo: usize, hi: usize) -> Result<Eigen> {
    heevr(m, lo, hi, true)
}

/// Eigenvalues with ascending index in `lo..hi`.
pub fn eigvalsh_range(m: &DenseMatrix, lo: usize, hi: usize) -> Result<Vec<f64>> {
    heevr(m, lo, hi, false).map(|e| e.values)
}

fn heevr(m: &DenseMatrix, lo: usize, hi: usize, vectors: bool) -> Result<Eigen> {
    if lo >= hi || hi > m.n {
        return Err(Error::InvalidArgument(format!(
            "eigen range {lo}..{hi} invalid for dimension {}",
            m.n
        )));
    }
    let n = m.n as i32;
    let count = hi - lo;
    let mut a = m.data.clone();
    let mut w = vec![0.0; m.n];
    let mut z = vec![Complex64::new(0.0, 0.0); if vectors { m.n * count } else { 1 }];
    let mut isuppz = vec![0i32; 2 * count.max(1)];
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let range = b'I' as c_char;
    let uplo = b'U' as c_char;
    let (il, iu) = (lo as i32 + 1, hi as i32);
    let (vl, vu, abstol) = (0.0, 0.0, 0.0);
    let ldz = n.max(1);
    let mut found = 0;
    let mut info = 0;
    let mut work_q = Complex64::new(0.0, 0.0);
    let mut rwork_q = 0.0;
    let mut iwork_q = 0;
    // SAFETY: z has n*count entries (ldz = n), workspace sized by query.
    unsafe {
        zheevr_(
            &jobz,
            &range,
            &uplo,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut found,
            w.as_mut_ptr(),
            as_lapack(z.as_mut_ptr()),
            &ldz,
            isuppz.as_mut_ptr(),
            as_lapack(&mut work_q),
            &-1,
            &mut rwork_q,
            &-1,
            &mut iwork_q,
            &-1,
            &mut info,
        );
    }
    lapack_info("zheevr (query)", info)?;
    let lwork = work_q.re as i32;
    let lrwork = rwork_q as i32;
    let liwork = iwork_q;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevr_(
            &jobz,
            &range,
            &uplo,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut found,
            w.as_mut_ptr(),
            as_lapack(z.as_mut_ptr()),
            &ldz,
            isuppz.as_mut_ptr(),
            as_lapack(work.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_info("zheevr", info)?;
    if found as usize != count {
        return Err(Error::Numeric(format!("zheevr found {found} of {count} eigenvalues")));
    }
    w.truncate(count);
    Ok(Eigen {
        values: w,
        vectors: if vectors { z } else { Vec::new() },
        n: m.n,
    })
}

/// Eigendecomposition of a real symmetric matrix given column-major.
pub fn eigh_real(n: usize, data: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(data.len(), n * n);
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let ni = n as i32;
    let mut a = data.to_vec();
    let mut w = vec![0.0; n];
    let jobz = b'V' as c_char;
    let uplo = b'U' as c_char;
    let mut info = 0;
    let mut work_q = 0.0;
    let mut iwork_q = 0;
    // SAFETY: a holds n*n entries; workspace sized by query.
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut work_q,
            &-1,
            &mut iwork_q,
            &-1,
            &mut info,
        );
    }
    lapack_info("dsyevd (query)", info)?;
    let lwork = work_q as i32;
    let liwork = iwork_q;
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_info("dsyevd", info)?;
    Ok((w, a))
}

/// Eigendecomposition of a real symmetric tridiagonal matrix.
///
/// Returns ascending eigenvalues and column-major eigenvectors.
pub fn eigh_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert!(offdiag.len() + 1 == n || (n == 0 && offdiag.is_empty()));
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let ni = n as i32;
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    let mut work = vec![0.0; (2 * n).saturating_sub(2).max(1)];
    let jobz = b'V' as c_char;
    let mut info = 0;
    // SAFETY: dstev needs d (n), e (n-1), z (n*n), work (max(1, 2n-2)).
    unsafe {
        dstev_(
            &jobz,
            &ni,
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            work.as_mut_ptr(),
            &mut info,
        );
    }
    lapack_info("dstev", info)?;
    Ok((d, z))
}

/// Phase `arg det(A)` and `ln|det A|` of a square matrix via LU.
pub fn det_phase(m: &DenseMatrix) -> Result<(f64, f64)> {
    let n = m.n as i32;
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let mut a = m.data.clone();
    let mut ipiv = vec![0i32; m.n];
    let mut info = 0;
    // SAFETY: a holds n*n entries, ipiv n.
    unsafe {
        zgetrf_(&n, &n, as_lapack(a.as_mut_ptr()), &n, ipiv.as_mut_ptr(), &mut info);
    }
    if info > 0 {
        // Exactly singular: phase undefined, magnitude zero.
        return Ok((0.0, f64::NEG_INFINITY));
    }
    lapack_info("zgetrf", info)?;
    let mut phase = Complex64::new(1.0, 0.0);
    let mut log_abs = 0.0;
    for i in 0..m.n {
        let d = a[i * m.n + i];
        log_abs += d.norm().ln();
        phase *= d / d.norm();
        if ipiv[i] as usize != i + 1 {
            phase = -phase;
        }
    }
    Ok((phase.arg(), log_abs))
}

/// Unitary factor `W Vᴴ` of the polar decomposition of a square matrix
/// with SVD `A = W Σ Vᴴ`.
pub fn polar_unitary(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.n as i32;
    if n == 0 {
        return Ok(DenseMatrix::zeros(0));
    }
    let mut a = m.data.clone();
    let mut s = vec![0.0; m.n];
    let mut u = vec![Complex64::new(0.0, 0.0); m.n * m.n];
    let mut vt = vec![Complex64::new(0.0, 0.0); m.n * m.n];
    let mut rwork = vec![0.0; 5 * m.n];
    let job = b'A' as c_char;
    let mut info = 0;
    let mut work_q = Complex64::new(0.0, 0.0);
    // SAFETY: all buffers are n*n (or 5n for rwork); workspace sized by query.
    unsafe {
        zgesvd_(
            &job,
            &job,
            &n,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            s.as_mut_ptr(),
            as_lapack(u.as_mut_ptr()),
            &n,
            as_lapack(vt.as_mut_ptr()),
            &n,
            as_lapack(&mut work_q),
            &-1,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    lapack_info("zgesvd (query)", info)?;
    let lwork = (work_q.re as i32).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zgesvd_(
            &job,
            &job,
            &n,
            &n,
            as_lapack(a.as_mut_ptr()),
            &n,
            s.as_mut_ptr(),
            as_lapack(u.as_mut_ptr()),
            &n,
            as_lapack(vt.as_mut_ptr()),
            &n,
            as_lapack(work.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    lapack_info("zgesvd", info)?;
    let mut out = DenseMatrix::zeros(m.n);
    for c in 0..m.n {
        for r in 0..m.n {
            let v: Complex64 = (0..m.n).map(|k| u[k * m.n + r] * vt[c * m.n + k]).sum();
            out.set(r, c, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_hermitian(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n);
        for r in 0..n {
            m.set(r, r, c(r as f64 * 0.7 - 1.0, 0.0));
            for col in r + 1..n {
                let v = c(((r * 7 + col * 3) % 5) as f64 * 0.1, ((r + 2 * col) % 3) as f64 * 0.05);
                m.set(r, col, v);
                m.set(col, r, v.conj());
            }
        }
        m
    }

    #[test]
    fn eigh_reconstructs_eigenpairs() {
        let m = sample_hermitian(9);
        let e = eigh(&m).unwrap();
        for k in 0..9 {
            let v = e.vector(k);
            for r in 0..9 {
                let av: Complex64 = (0..9).map(|col| m.get(r, col) * v[col]).sum();
                assert!((av - v[r] * e.values[k]).norm() < 1e-12);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn range_solver_matches_full_solver() {
        let m = sample_hermitian(12);
        let full = eigvalsh(&m).unwrap();
        let part = eigh_range(&m, 7, 11).unwrap();
        for (k, v) in part.values.iter().enumerate() {
            assert!((v - full[7 + k]).abs() < 1e-12);
        }
        assert_eq!(eigvalsh_range(&m, 0, 1).unwrap().len(), 1);
        assert!(eigh_range(&m, 3, 3).is_err());
    }

    #[test]
    fn tridiagonal_two_by_two() {
        let (vals, vecs) = eigh_tridiagonal(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        assert!((vecs[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn polar_factor_is_unitary_and_recovers_unitaries() {
        let m = sample_hermitian(5);
        let q = polar_unitary(&m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: Complex64 = (0..5).map(|k| q.get(k, i).conj() * q.get(k, j)).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - c(expected, 0.0)).norm() < 1e-12);
            }
        }
        let mut rot = DenseMatrix::zeros(2);
        rot.set(0, 0, c(0.6, 0.0));
        rot.set(0, 1, c(0.0, 0.8));
        rot.set(1, 0, c(0.0, 0.8));
        rot.set(1, 1, c(0.6, 0.0));
        let back = polar_unitary(&rot).unwrap();
        assert!(back.as_slice().iter().zip(rot.as_slice()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn determinant_phase_of_diagonal_and_permutation() {
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 0, Complex64::from_polar(2.0, 0.3));
        m.set(1, 1, Complex64::from_polar(0.5, 0.4));
        let (phase, log_abs) = det_phase(&m).unwrap();
        assert!((phase - 0.7).abs() < 1e-14);
        assert!(log_abs.abs() < 1e-14);

        let mut p = DenseMatrix::zeros(2);
        p.set(0, 1, c(1.0, 0.0));
        p.set(1, 0, c(1.0, 0.0));
        let (phase, _) = det_phase(&p).unwrap();
        assert!((phase.abs() - std::f64::consts::PI).abs() < 1e-14);
    }
}
