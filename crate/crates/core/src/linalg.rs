//! Dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `a - b^H`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Averages `m` with its conjugate transpose.
pub fn symmetrize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = real(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Hermitian eigendecomposition. Eigenvalues are returned in descending order
/// together with the matching eigenvector columns; no tie-breaking or phase
/// normalization is applied here.
pub fn eigh_descending(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max(m: &CMat) -> f64 {
    eigen_range(m).1
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn eigen_range(m: &CMat) -> (f64, f64) {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
pub fn cholesky(m: &CMat) -> Result<Cholesky<C64, Dyn>> {
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::numeric("matrix is not Hermitian positive definite"))
}

/// `ln det` of a Hermitian positive-definite matrix.
pub fn log_det_hpd(m: &CMat) -> Result<f64> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        acc += l[(i, i)].re.ln();
    }
    let value = 2.0 * acc;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numeric("non-finite log-determinant"))
    }
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn inverse_hpd(m: &CMat) -> Result<CMat> {
    let mut inv = cholesky(m)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// `u u^H`.
pub fn outer(u: &CVec) -> CMat {
    u * u.adjoint()
}

/// `x^H A x`, real part.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

/// Gram-Schmidt completion: returns `n - k` unit vectors orthogonal to the
/// `k` orthonormal columns of `basis`, drawn deterministically from the
/// standard basis in index order.
pub fn orthonormal_completion(basis: &CMat, count: usize) -> CMat {
    let n = basis.nrows();
    let mut cols: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(count);
    for e in 0..n {
        if out.len() == count {
            break;
        }
        let mut v = CVec::zeros(n);
        v[e] = ONE;
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= real(norm);
            cols.push(v.clone());
            out.push(v);
        }
    }
    if out.is_empty() {
        return CMat::zeros(n, 0);
    }
    CMat::from_columns(&out)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
