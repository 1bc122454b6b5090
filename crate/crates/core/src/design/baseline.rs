use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_normal;
use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::EigenBasis;
use crate::linalg::{self, real, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    /// `CN(0, 1/M)` entries, columns normalized to unit norm.
    GaussianUnitNorm,
    /// Entries `e^{jθ}/√M`, `θ ~ U(-π, π)`.
    PhaseOnly,
}

pub fn random_matrix<R: Rng + ?Sized>(m: usize, q: usize, mode: RandomMode, rng: &mut R) -> Result<ObservationMatrix> {
    if m == 0 || q == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    match mode {
        RandomMode::GaussianUnitNorm => {
            let scale = 1.0 / (m as f64).sqrt();
            let mut w = CMat::from_fn(m, q, |_, _| complex_normal(rng) * scale);
            for mut col in w.column_iter_mut() {
                let n = col.norm();
                col /= real(n);
            }
            ObservationMatrix::unit_norm(w)
        }
        RandomMode::PhaseOnly => {
            let amp = 1.0 / (m as f64).sqrt();
            let w = CMat::from_fn(m, q, |_, _| C64::from_polar(amp, rng.gen_range(-PI..PI)));
            ObservationMatrix::unit_modulus(w)
        }
    }
}

/// First `Q` eigenvectors; beyond the rank, an orthonormal completion of the
/// eigenbasis is appended.
pub fn top_q_matrix(basis: &EigenBasis, q: usize) -> Result<ObservationMatrix> {
    let m = basis.ambient_dim();
    if q > m {
        return Err(Error::invalid(format!("Q = {q} exceeds the number of antennas {m}")));
    }
    if q == 0 {
        return Err(Error::invalid("pilot count must be at least 1"));
    }
    let k = basis.rank();
    let mut w = CMat::zeros(m, q);
    for c in 0..q.min(k) {
        w.set_column(c, &basis.eigenvectors.column(c));
    }
    if q > k {
        let pad = linalg::orthonormal_completion(&basis.eigenvectors, q - k);
        for c in 0..pad.ncols() {
            w.set_column(k + c, &pad.column(c));
        }
    }
    Ok(ObservationMatrix::unit_norm(w)?.with_indices((0..q).collect()))
}

/// Unitary DFT, `W[m, q] = e^{-j2π mq/M} / √M`.
pub fn dft_matrix(m: usize) -> Result<ObservationMatrix> {
    if m == 0 {
        return Err(Error::invalid("matrix dimension must be positive"));
    }
    let amp = 1.0 / (m as f64).sqrt();
    let w = CMat::from_fn(m, m, |r, c| {
        let phase = -2.0 * PI * ((r * c) % m) as f64 / m as f64;
        C64::from_polar(amp, phase)
    });
    ObservationMatrix::unit_norm(w)
}
