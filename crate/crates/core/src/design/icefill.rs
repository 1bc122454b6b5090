use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::EigenBasis;
use crate::linalg::CMat;

/// Integer pilot assignment produced by ice-filling.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotAllocation {
    /// Pilot reuse frequency `n_k` per eigendirection.
    pub reuse: Vec<usize>,
    /// Eigen index (0-based) chosen at each timeslot.
    pub order: Vec<usize>,
    /// Final ice levels `σ²/λ_k^Q = n_k + σ²/λ_k`.
    pub ice_levels: Vec<f64>,
}

impl PilotAllocation {
    pub fn num_pilots(&self) -> usize {
        self.order.len()
    }

    /// `n_k` as reals, for comparison against a power allocation.
    pub fn reuse_f64(&self) -> Vec<f64> {
        self.reuse.iter().map(|&n| n as f64).collect()
    }
}

/// Working eigenvalues `λ_k^t` for `t = 0..=Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct IceFillTrace {
    pub working: Vec<Vec<f64>>,
}

impl IceFillTrace {
    /// Ice levels `σ²/λ_k^t` at timeslot `t`.
    pub fn ice_levels(&self, t: usize, sigma2: f64) -> Vec<f64> {
        self.working[t].iter().map(|&l| sigma2 / l).collect()
    }

    /// Reuse counts after the first `t` assignments.
    pub fn reuse_at(&self, order: &[usize], t: usize) -> Vec<usize> {
        let mut n = vec![0; self.working[0].len()];
        for &k in &order[..t] {
            n[k] += 1;
        }
        n
    }
}

/// Greedy eigenvector assignment on a bare spectrum.
///
/// Each timeslot takes the largest working eigenvalue (smallest index on
/// ties) and squeezes only that one: `λ ← λσ²/(λ + σ²)`.
pub fn ice_fill_spectrum(eigenvalues: &[f64], sigma2: f64, q: usize) -> Result<(PilotAllocation, IceFillTrace)> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    if eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid("eigenvalues must be positive and finite"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if q == 0 {
        return Err(Error::invalid("pilot count must be at least 1"));
    }
    let k_total = eigenvalues.len();
    let mut working = eigenvalues.to_vec();
    let mut trace = Vec::with_capacity(q + 1);
    trace.push(working.clone());
    let mut reuse = vec![0usize; k_total];
    let mut order = Vec::with_capacity(q);
    for _ in 0..q {
        let mut pick = 0;
        for k in 1..k_total {
            if working[k] > working[pick] {
                pick = k;
            }
        }
        let lam = working[pick];
        working[pick] = lam * sigma2 / (lam + sigma2);
        reuse[pick] += 1;
        order.push(pick);
        trace.push(working.clone());
    }
    let ice_levels = eigenvalues
        .iter()
        .zip(&reuse)
        .map(|(&l, &n)| n as f64 + sigma2 / l)
        .collect();
    Ok((PilotAllocation { reuse, order, ice_levels }, IceFillTrace { working: trace }))
}

/// Ice-filling observation matrix: column `t` is the eigenvector picked at
/// timeslot `t`.
pub fn ice_fill(basis: &EigenBasis, sigma2: f64, q: usize) -> Result<(ObservationMatrix, PilotAllocation)> {
    let (w, alloc, _) = ice_fill_traced(basis, sigma2, q)?;
    Ok((w, alloc))
}

/// [`ice_fill`] plus the working-eigenvalue trajectory.
pub fn ice_fill_traced(
    basis: &EigenBasis,
    sigma2: f64,
    q: usize,
) -> Result<(ObservationMatrix, PilotAllocation, IceFillTrace)> {
    let (alloc, trace) = ice_fill_spectrum(&basis.eigenvalues, sigma2, q)?;
    let m = basis.ambient_dim();
    let mut w = CMat::zeros(m, q);
    for (t, &k) in alloc.order.iter().enumerate() {
        w.set_column(t, &basis.eigenvectors.column(k));
    }
    let w = ObservationMatrix::unit_norm(w)?.with_indices(alloc.order.clone());
    Ok((w, alloc, trace))
}
