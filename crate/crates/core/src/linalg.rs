//! Thin helpers over `faer` for the dense complex linear algebra used by the
//! solvers. Every routine runs sequentially so results are bit-reproducible.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Accum, Mat, MatRef, Par};

use crate::{Error, Result, C64};

/// Dense complex matrix.
pub type CMat = Mat<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

/// `a * b`.
pub fn mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let mut out = zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

/// `a * b^H`.
pub fn mul_adjoint(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let mut out = zeros(a.nrows(), b.nrows());
    matmul(out.as_mut(), Accum::Replace, a, b.adjoint(), ONE, Par::Seq);
    out
}

/// `out += alpha * a * a^H`.
pub fn add_gram(out: &mut CMat, a: MatRef<'_, C64>, alpha: f64) {
    matmul(
        out.as_mut(),
        Accum::Add,
        a,
        a.adjoint(),
        C64::new(alpha, 0.0),
        Par::Seq,
    );
}

pub fn adjoint(a: MatRef<'_, C64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn frobenius_sq(a: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    frobenius_sq(a).sqrt()
}

pub fn frobenius_dist_sq(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermitian_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replaces `a` with `(a + a^H) / 2`.
pub fn symmetrize(a: &mut CMat) {
    let n = a.nrows();
    for j in 0..n {
        a[(j, j)] = C64::new(a[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// Eigendecomposition of a Hermitian matrix (lower triangle is read).
/// Eigenvalues are returned in nondecreasing order with matching columns of
/// the unitary factor.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigendecomposition of a {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    let mut u = zeros(n, n);
    let mut s = Diag::<C64>::zeros(n);
    let par = Par::Seq;
    let req =
        evd::self_adjoint_evd_scratch::<C64>(n, ComputeEigenvectors::Yes, par, Default::default());
    let mut buf = MemBuffer::new(req);
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("hermitian eigendecomposition: {e:?}")))?;
    let values = s.column_vector().iter().map(|v| v.re).collect();
    Ok((values, u))
}

pub fn hermitian_eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|(v, _)| v)
}

/// Thin singular value decomposition `a = U diag(s) V^H`, singular values in
/// nonincreasing order.
pub struct ThinSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn thin_svd(a: MatRef<'_, C64>) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut u = zeros(m, k);
    let mut v = zeros(n, k);
    let mut s = Diag::<C64>::zeros(k);
    let par = Par::Seq;
    let req = svd::svd_scratch::<C64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(req);
    svd::svd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("singular value decomposition: {e:?}")))?;
    let s = s.column_vector().iter().map(|v| v.re).collect();
    Ok(ThinSvd { u, s, v })
}

pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    thin_svd(a).map(|d| d.s)
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Singular values below `rcond * s_max` are treated as zero; the returned
/// rank counts the retained ones.
pub fn lstsq_min_norm(a: MatRef<'_, C64>, b: &[C64], rcond: f64) -> Result<(Vec<C64>, usize)> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "least squares with {} rows and a right-hand side of length {}",
            a.nrows(),
            b.len()
        )));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok((vec![ZERO; n], 0));
    }
    let ThinSvd { u, s, v } = thin_svd(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let mut x = vec![ZERO; n];
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if smax == 0.0 || sk <= rcond * smax {
            continue;
        }
        rank += 1;
        let mut coef = ZERO;
        for (i, bi) in b.iter().enumerate() {
            coef += u[(i, k)].conj() * bi;
        }
        coef /= sk;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += v[(i, k)] * coef;
        }
    }
    Ok((x, rank))
}

pub fn mat_vec(a: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = vec![ZERO; a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * xj;
        }
    }
    out
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
