//! Mutual information and the rank-one posterior-kernel recursion.

use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{self, real, CMat, CVec};

/// `ln det(I_Q + W^H Σ W / σ²)` in nats.
pub fn mutual_information(w: &ObservationMatrix, kernel: &Kernel, sigma2: f64) -> Result<f64> {
    mutual_information_raw(w.matrix(), kernel.matrix(), sigma2)
}

pub(crate) fn mutual_information_raw(w: &CMat, sigma: &CMat, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if w.nrows() != sigma.nrows() {
        return Err(Error::invalid("observation matrix and kernel dimensions differ"));
    }
    let q = w.ncols();
    let mut a = w.adjoint() * sigma * w / real(sigma2);
    for i in 0..q {
        a[(i, i)] += real(1.0);
    }
    linalg::symmetrize(&mut a);
    linalg::log_det_hpd(&a)
}

/// `ln(1 + w^H Σ_t w / σ²)`.
pub fn mi_increment(sigma_t: &Kernel, w: &CVec, sigma2: f64) -> f64 {
    (1.0 + linalg::quad_form(sigma_t.matrix(), w) / sigma2).ln()
}

/// Rank-one downdate `Σ_t = Σ_{t-1} - Σ w w^H Σ / (w^H Σ w + σ²)`.
///
/// `w` is normalized before use; a zero vector is rejected.
pub fn posterior_kernel_update(sigma_prev: &Kernel, w: &CVec, sigma2: f64) -> Result<Kernel> {
    let updated = downdate(sigma_prev.matrix(), w, sigma2)?;
    Ok(Kernel::from_trusted(updated, sigma_prev.label()))
}

pub(crate) fn downdate(sigma: &CMat, w: &CVec, sigma2: f64) -> Result<CMat> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let norm = w.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid("observation vector has zero norm"));
    }
    let w = w / real(norm);
    let sw = sigma * &w;
    let denom = w.dotc(&sw).re + sigma2;
    let mut out = sigma.clone();
    out.ger(real(-1.0 / denom), &sw, &sw.conjugate(), real(1.0));
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// Batch posterior covariance `Σ - Σ W (W^H Σ W + σ² I)^{-1} W^H Σ`.
pub fn posterior_covariance(w: &CMat, sigma: &CMat, sigma2: f64) -> Result<CMat> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let sw = sigma * w;
    let mut a = w.adjoint() * &sw;
    for i in 0..a.nrows() {
        a[(i, i)] += real(sigma2);
    }
    linalg::symmetrize(&mut a);
    let chol = linalg::cholesky(&a)?;
    let x = chol.solve(&sw.adjoint());
    let mut out = sigma - &sw * x;
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// Kernel wrapper for [`posterior_covariance`].
pub fn posterior_kernel(w: &ObservationMatrix, prior: &Kernel, sigma2: f64) -> Result<Kernel> {
    let m = posterior_covariance(w.matrix(), prior.matrix(), sigma2)?;
    Ok(Kernel::from_trusted(m, prior.label()))
}
