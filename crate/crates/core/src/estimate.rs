//! Channel estimators operating on received pilots.

use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{self, real, CMat, CVec};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub posterior_mean: CVec,
    /// Trace of the posterior covariance implied by the prior used.
    pub posterior_trace: f64,
    /// `‖ĥ - h‖²`, when the true channel was supplied.
    pub squared_error: Option<f64>,
}

impl EstimateResult {
    pub fn with_truth(mut self, h: &CVec) -> Self {
        self.squared_error = Some((&self.posterior_mean - h).norm_squared());
        self
    }
}

/// Bayesian MMSE estimator with precomputed weights
/// `G = Σ W (W^H Σ W + σ² I)^{-1}`.
///
/// The weights depend only on `(W, Σ, σ²)`, so one estimator serves any
/// number of trials.
#[derive(Debug, Clone)]
pub struct MmseEstimator {
    weights: CMat,
    posterior_trace: f64,
}

impl MmseEstimator {
    pub fn new(w: &ObservationMatrix, prior: &Kernel, sigma2: f64) -> Result<Self> {
        Self::from_parts(w.matrix(), prior.matrix(), sigma2)
    }

    pub(crate) fn from_parts(w: &CMat, sigma: &CMat, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        if w.nrows() != sigma.nrows() {
            return Err(Error::invalid(format!(
                "observation matrix has {} rows but kernel is {}x{}",
                w.nrows(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let sw = sigma * w;
        let mut a = w.adjoint() * &sw;
        for i in 0..a.nrows() {
            a[(i, i)] += real(sigma2);
        }
        linalg::symmetrize(&mut a);
        let chol = linalg::cholesky(&a)
            .map_err(|_| Error::numeric("pilot covariance W^H Σ W + σ² I is not positive definite"))?;
        // G^H = A^{-1} W^H Σ since A is Hermitian.
        let gh = chol.solve(&sw.adjoint());
        let weights = gh.adjoint();
        let reduction: f64 = (0..weights.nrows())
            .map(|i| (0..weights.ncols()).map(|j| (weights[(i, j)] * sw[(i, j)].conj()).re).sum::<f64>())
            .sum();
        let posterior_trace = (linalg::trace_re(sigma) - reduction).max(0.0);
        Ok(MmseEstimator { weights, posterior_trace })
    }

    pub fn weights(&self) -> &CMat {
        &self.weights
    }

    pub fn posterior_trace(&self) -> f64 {
        self.posterior_trace
    }

    pub fn estimate(&self, y: &CVec) -> Result<EstimateResult> {
        if y.len() != self.weights.ncols() {
            return Err(Error::invalid(format!(
                "expected {} pilot observations, got {}",
                self.weights.ncols(),
                y.len()
            )));
        }
        Ok(EstimateResult {
            posterior_mean: &self.weights * y,
            posterior_trace: self.posterior_trace,
            squared_error: None,
        })
    }
}

/// Posterior mean `Σ W (W^H Σ W + σ² I)^{-1} y` and posterior trace.
pub fn mmse_estimate(w: &ObservationMatrix, prior: &Kernel, sigma2: f64, y: &CVec) -> Result<EstimateResult> {
    MmseEstimator::new(w, prior, sigma2)?.estimate(y)
}

/// Least-squares inversion `ĥ = (W^H)^+ y` for a square full-rank `W`.
#[derive(Debug, Clone)]
pub struct LsEstimator {
    pinv: CMat,
}

impl LsEstimator {
    pub fn new(w: &ObservationMatrix) -> Result<Self> {
        let wm = w.matrix();
        if wm.nrows() != wm.ncols() {
            return Err(Error::invalid(format!(
                "least squares needs a square observation matrix, got {}x{}",
                wm.nrows(),
                wm.ncols()
            )));
        }
        let svd = wm.adjoint().svd(true, true);
        let top = svd.singular_values.max();
        let bottom = svd.singular_values.min();
        if !(bottom > 1e-12 * top) {
            return Err(Error::invalid("observation matrix is rank deficient"));
        }
        let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::numeric(e.to_string()))?;
        Ok(LsEstimator { pinv })
    }

    pub fn estimate(&self, y: &CVec) -> Result<CVec> {
        if y.len() != self.pinv.ncols() {
            return Err(Error::invalid("pilot vector length does not match observation matrix"));
        }
        Ok(&self.pinv * y)
    }
}

pub fn ls_estimate(w: &ObservationMatrix, y: &CVec) -> Result<CVec> {
    LsEstimator::new(w)?.estimate(y)
}

/// Orthogonal matching pursuit over `dictionary` (M × D) in the sensed
/// domain `W^H · dictionary`.
pub fn omp_estimate(w: &ObservationMatrix, dictionary: &CMat, y: &CVec, sparsity: usize) -> Result<CVec> {
    let wm = w.matrix();
    if dictionary.nrows() != wm.nrows() {
        return Err(Error::invalid("dictionary rows must match the number of antennas"));
    }
    if y.len() != wm.ncols() {
        return Err(Error::invalid("pilot vector length does not match observation matrix"));
    }
    if sparsity > wm.ncols() {
        return Err(Error::invalid(format!(
            "sparsity {sparsity} exceeds the number of pilots {}",
            wm.ncols()
        )));
    }
    let m = dictionary.nrows();
    if sparsity == 0 {
        return Ok(CVec::zeros(m));
    }
    let sensed = wm.adjoint() * dictionary;
    let norms: Vec<f64> = sensed.column_iter().map(|c| c.norm()).collect();
    let y_norm = y.norm();

    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut residual = y.clone();
    let mut coef = CVec::zeros(0);
    for _ in 0..sparsity {
        if residual.norm() <= 1e-12 * y_norm.max(f64::MIN_POSITIVE) {
            break;
        }
        let corr = sensed.ad_mul(&residual);
        let pick = (0..sensed.ncols())
            .filter(|j| !support.contains(j) && norms[*j] > 0.0)
            .max_by(|&a, &b| (corr[a].norm() / norms[a]).total_cmp(&(corr[b].norm() / norms[b])));
        let Some(pick) = pick else { break };
        support.push(pick);
        let sub = CMat::from_columns(&support.iter().map(|&j| sensed.column(j)).collect::<Vec<_>>());
        coef = least_squares(&sub, y)?;
        residual = y - &sub * &coef;
    }
    let mut h = CVec::zeros(m);
    for (c, &j) in coef.iter().zip(&support) {
        h.axpy(*c, &dictionary.column(j), real(1.0));
    }
    Ok(h)
}

fn least_squares(a: &CMat, y: &CVec) -> Result<CVec> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    let bottom = svd.singular_values.min();
    if !(bottom > 1e-10 * top) {
        return Err(Error::numeric("ill-conditioned least-squares refit"));
    }
    svd.solve(y, 0.0).map_err(|e| Error::numeric(e.to_string()))
}
