//! Prior channel covariance kernels for a uniform planar array (UPA).
//!
//! Antenna `(ix, iy)` of an `mx × my` array maps to linear index
//! `ix * my + iy` (row-major over `(x, y)`), which is the ordering produced by
//! the Kronecker product `Σ_x ⊗ Σ_y`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat, CVec};
use crate::special::bessel_j0;

/// Default relative eigenvalue cutoff for rank truncation.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative Hermitian tolerance for kernel validation.
const HERMITIAN_TOL: f64 = 1e-10;

/// Relative negative-eigenvalue tolerance for kernel validation.
const PSD_TOL: f64 = 1e-8;

/// Relative tolerance under which two eigenvalues are treated as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaGeometry {
    pub mx: usize,
    pub my: usize,
    /// Antenna spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl UpaGeometry {
    pub fn new(mx: usize, my: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        let g = UpaGeometry { mx, my, spacing, wavelength };
        g.validate()?;
        Ok(g)
    }

    /// Geometry with unit wavelength and spacing `d_over_lambda`.
    pub fn with_ratio(mx: usize, my: usize, d_over_lambda: f64) -> Result<Self> {
        Self::new(mx, my, d_over_lambda, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mx == 0 || self.my == 0 {
            return Err(Error::invalid("array dimensions must be at least 1"));
        }
        if !(self.spacing > 0.0) || !(self.wavelength > 0.0) {
            return Err(Error::invalid("spacing and wavelength must be positive"));
        }
        Ok(())
    }

    pub fn num_antennas(&self) -> usize {
        self.mx * self.my
    }

    /// `2π d / λ`.
    pub fn phase_scale(&self) -> f64 {
        2.0 * PI * self.spacing / self.wavelength
    }

    /// Centered element positions `-(n-1)/2, …, (n-1)/2` along one axis.
    pub fn centered_indices(n: usize) -> Vec<f64> {
        let half = (n as f64 - 1.0) / 2.0;
        (0..n).map(|i| i as f64 - half).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelLabel {
    Perfect,
    Statistical,
    Exponential,
    Bessel,
    Sample,
}

impl fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelLabel::Perfect => "perfect",
            KernelLabel::Statistical => "statistical",
            KernelLabel::Exponential => "exponential",
            KernelLabel::Bessel => "bessel",
            KernelLabel::Sample => "sample",
        };
        f.write_str(s)
    }
}

/// Hermitian positive semidefinite channel covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    matrix: CMat,
    label: KernelLabel,
}

impl Kernel {
    /// Validates and wraps `matrix`. Small Hermitian defects are averaged out.
    pub fn new(mut matrix: CMat, label: KernelLabel) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid(format!(
                "kernel must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("kernel has non-finite entries"));
        }
        let scale = linalg::max_abs(&matrix);
        if linalg::hermitian_defect(&matrix) > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("kernel is not Hermitian"));
        }
        linalg::symmetrize(&mut matrix);
        if (0..matrix.nrows()).any(|i| matrix[(i, i)].re < 0.0) {
            return Err(Error::invalid("kernel has a negative diagonal entry"));
        }
        let eig = matrix.clone().symmetric_eigenvalues();
        let top = eig.iter().cloned().fold(0.0, f64::max);
        let bottom = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if matrix.nrows() > 0 && bottom < -PSD_TOL * top {
            return Err(Error::invalid(format!(
                "kernel is not positive semidefinite (min eigenvalue {bottom:e})"
            )));
        }
        Ok(Kernel { matrix, label })
    }

    /// Diagonal kernel with the given nonnegative variances.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = CVec::from_iterator(diag.len(), diag.iter().map(|&x| real(x)));
        Kernel::new(CMat::from_diagonal(&d), KernelLabel::Perfect)
            .expect("diagonal kernel with nonnegative entries")
    }

    /// Wraps a matrix that is Hermitian PSD by construction.
    pub(crate) fn from_trusted(matrix: CMat, label: KernelLabel) -> Self {
        Kernel { matrix, label }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn label(&self) -> KernelLabel {
        self.label
    }

    pub fn with_label(mut self, label: KernelLabel) -> Self {
        self.label = label;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.matrix)
    }
}

/// Rank-truncated eigendecomposition `Σ ≈ U_K Λ_K U_K^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    /// `M × K`, orthonormal columns.
    pub eigenvectors: CMat,
    /// Strictly positive, descending.
    pub eigenvalues: Vec<f64>,
}

impl EigenBasis {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.eigenvectors.column(k).into_owned()
    }

    /// `U_K Λ_K U_K^H`.
    pub fn reconstruct(&self) -> CMat {
        let m = self.ambient_dim();
        let mut out = CMat::zeros(m, m);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvectors.column(k);
            out += (&u * u.adjoint()) * real(lam);
        }
        out
    }
}

/// Deterministic Hermitian eigendecomposition with rank truncation.
///
/// Eigenvalues above `rank_tol · λ_max` are kept, in descending order.
/// Near-equal eigenvalues are ordered by the position of their eigenvector's
/// largest-magnitude entry, and each eigenvector is rotated so that entry is
/// real and positive.
pub fn evd_hermitian(kernel: &Kernel, rank_tol: f64) -> Result<EigenBasis> {
    let m = kernel.matrix();
    let scale = linalg::max_abs(m);
    if linalg::hermitian_defect(m) > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    let n = m.nrows();
    if n == 0 || scale == 0.0 {
        return Ok(EigenBasis { eigenvectors: CMat::zeros(n, 0), eigenvalues: Vec::new() });
    }
    let (values, vectors) = linalg::eigh_descending(m);
    let top = values[0];
    let cutoff = rank_tol * top;

    let mut pairs: Vec<(f64, usize, CVec)> = Vec::new();
    for (k, &lam) in values.iter().enumerate() {
        if lam <= cutoff || lam <= 0.0 {
            continue;
        }
        let mut v = vectors.column(k).into_owned();
        let peak = peak_index(&v);
        let phase = v[peak] / real(v[peak].norm());
        v /= phase;
        v[peak] = real(v[peak].re);
        pairs.push((lam, peak, v));
    }

    // Group runs of tied eigenvalues and order each run's vectors by peak
    // index; the values themselves stay descending.
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[start].0 - pairs[end].0) <= TIE_TOL * pairs[start].0 {
            end += 1;
        }
        pairs[start..end].sort_by_key(|p| p.1);
        start = end;
    }

    let cols: Vec<CVec> = pairs.into_iter().map(|p| p.2).collect();
    let eigenvectors = if cols.is_empty() { CMat::zeros(n, 0) } else { CMat::from_columns(&cols) };
    Ok(EigenBasis { eigenvectors, eigenvalues })
}

/// Index of the largest-magnitude entry (first one on near-ties).
fn peak_index(v: &CVec) -> usize {
    let best = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    v.iter().position(|z| z.norm() >= best * (1.0 - 1e-12)).unwrap_or(0)
}

/// `Σ + σ_h² I`: true kernel corrupted by white estimation error.
pub fn statistical_kernel(true_kernel: &Kernel, sigma_h2: f64) -> Result<Kernel> {
    if !(sigma_h2 >= 0.0) {
        return Err(Error::invalid("kernel error variance must be nonnegative"));
    }
    let n = true_kernel.dim();
    let m = true_kernel.matrix() + linalg::identity(n) * real(sigma_h2);
    Ok(Kernel { matrix: m, label: KernelLabel::Statistical })
}

fn axis_kernel(n: usize, entry: impl Fn(f64) -> f64) -> CMat {
    let idx = UpaGeometry::centered_indices(n);
    CMat::from_fn(n, n, |i, j| real(entry(idx[i] - idx[j])))
}

/// Squared-exponential kernel `exp(-η1² (2πd/λ)² Δ²)` per axis, combined as
/// `Σ_x ⊗ Σ_y`.
pub fn exponential_kernel(geom: &UpaGeometry, eta1: f64) -> Result<Kernel> {
    geom.validate()?;
    if !(eta1 > 0.0) {
        return Err(Error::invalid("eta1 must be positive"));
    }
    let c = eta1 * eta1 * geom.phase_scale().powi(2);
    let f = |delta: f64| (-c * delta * delta).exp();
    let m = linalg::kron(&axis_kernel(geom.mx, f), &axis_kernel(geom.my, f));
    Ok(Kernel { matrix: m, label: KernelLabel::Exponential })
}

/// Bessel kernel `J0(η2 (2πd/λ) |Δ|)` per axis, combined as `Σ_x ⊗ Σ_y`.
pub fn bessel_kernel(geom: &UpaGeometry, eta2: f64) -> Result<Kernel> {
    geom.validate()?;
    if !(eta2 > 0.0) {
        return Err(Error::invalid("eta2 must be positive"));
    }
    let c = eta2 * geom.phase_scale();
    let f = |delta: f64| bessel_j0(c * delta.abs());
    let m = linalg::kron(&axis_kernel(geom.mx, f), &axis_kernel(geom.my, f));
    Ok(Kernel { matrix: m, label: KernelLabel::Bessel })
}

/// `(1/N) Σ_n h_n h_n^H`.
pub fn sample_covariance(samples: &[CVec]) -> Result<Kernel> {
    let first = samples.first().ok_or_else(|| Error::invalid("no samples"))?;
    let m = first.len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(Error::invalid("samples have inconsistent lengths"));
    }
    let mut acc = CovarianceAccumulator::new(m);
    for s in samples {
        acc.push(s);
    }
    acc.finish()
}

/// Streaming sample covariance, for ensembles too large to hold in memory.
#[derive(Debug, Clone)]
pub struct CovarianceAccumulator {
    sum: CMat,
    count: usize,
}

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        CovarianceAccumulator { sum: CMat::zeros(dim, dim), count: 0 }
    }

    pub fn push(&mut self, h: &CVec) {
        self.sum.ger(linalg::ONE, h, &h.conjugate(), linalg::ONE);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &CovarianceAccumulator) {
        self.sum += &other.sum;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<Kernel> {
        if self.count == 0 {
            return Err(Error::invalid("no samples"));
        }
        let mut m = self.sum / real(self.count as f64);
        linalg::symmetrize(&mut m);
        Ok(Kernel { matrix: m, label: KernelLabel::Sample })
    }
}
