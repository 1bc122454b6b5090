use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::EigenBasis;
use crate::linalg::{real, CMat};

/// Continuous power allocation over kernel eigendirections.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `p_k = (β - σ²/λ_k)^+`, aligned with the eigenvalues.
    pub powers: Vec<f64>,
    /// Water level `β`.
    pub water_level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Number of eigendirections with positive power.
    pub fn wet_count(&self) -> usize {
        self.powers.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Water-filling over the spectrum `eigenvalues` with budget `q`.
///
/// The water level is bracketed by bisection on
/// `[min σ²/λ_k, max σ²/λ_k + Q]`; once the set of wet channels is known the
/// level is solved in closed form on that set, which pins `Σ p_k = Q` to
/// rounding error.
pub fn water_fill(eigenvalues: &[f64], sigma2: f64, q: f64) -> Result<PowerAllocation> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    if eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid("eigenvalues must be positive and finite"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid("power budget must be positive"));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("noise variance must be nonnegative"));
    }
    let floors: Vec<f64> = eigenvalues.iter().map(|&l| sigma2 / l).collect();
    let filled = |beta: f64| -> f64 { floors.iter().map(|&f| (beta - f).max(0.0)).sum() };

    let mut lo = floors.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = floors.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + q;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = filled(mid);
        if (v - q).abs() <= 1e-12 * q {
            lo = mid;
            hi = mid;
            break;
        }
        if v < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    let bracket = 0.5 * (lo + hi);

    // Closed-form level on the wet set found by bisection.
    let wet: Vec<f64> = floors.iter().cloned().filter(|&f| f < bracket).collect();
    let beta = if wet.is_empty() {
        bracket
    } else {
        let candidate = (q + wet.iter().sum::<f64>()) / wet.len() as f64;
        let consistent = floors.iter().all(|&f| (f < bracket) == (f < candidate) || (f - candidate).abs() <= 1e-12 * candidate);
        if consistent { candidate } else { bracket }
    };
    let powers = floors.iter().map(|&f| (beta - f).max(0.0)).collect();
    Ok(PowerAllocation { powers, water_level: beta })
}

/// `W = U_K P` with `P = diag(√p_k)` zero-padded to `Q` columns.
///
/// When `Q` is smaller than the number of wet eigendirections every wet
/// direction is still emitted, so the result then has more than `Q` columns;
/// the total power `‖W‖_F² = Σ p_k = Q` holds in every case.
pub fn water_fill_matrix(basis: &EigenBasis, alloc: &PowerAllocation, q: usize) -> Result<ObservationMatrix> {
    if alloc.powers.len() != basis.rank() {
        return Err(Error::invalid(format!(
            "allocation has {} powers but basis has rank {}",
            alloc.powers.len(),
            basis.rank()
        )));
    }
    let wet = alloc.wet_count();
    let cols = q.max(wet);
    let m = basis.ambient_dim();
    let mut w = CMat::zeros(m, cols);
    for (k, &p) in alloc.powers.iter().enumerate().filter(|(_, &p)| p > 0.0) {
        w.set_column(k, &(basis.eigenvectors.column(k) * real(p.sqrt())));
    }
    let indices = (0..cols).collect();
    Ok(ObservationMatrix::scaled_eigen(w, alloc.total())?.with_indices(indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::seeded_rng;
    use crate::kernels::{evd_hermitian, Kernel, DEFAULT_RANK_TOL};
    use crate::linalg::max_abs;
    use rand::Rng;

    /// Independent water-level solve: try every candidate wet-set size.
    fn water_level_by_enumeration(lams: &[f64], sigma2: f64, q: f64) -> f64 {
        let mut floors: Vec<f64> = lams.iter().map(|l| sigma2 / l).collect();
        floors.sort_by(f64::total_cmp);
        for n in (1..=floors.len()).rev() {
            let beta = (q + floors[..n].iter().sum::<f64>()) / n as f64;
            if beta > floors[n - 1] {
                return beta;
            }
        }
        unreachable!()
    }

    #[test]
    fn two_channel_examples() {
        let a = water_fill(&[2.0, 1.0], 1.0, 3.0).unwrap();
        assert!((a.water_level - 2.25).abs() < 1e-12);
        assert!((a.powers[0] - 1.75).abs() < 1e-12 && (a.powers[1] - 1.25).abs() < 1e-12);

        let b = water_fill(&[4.0, 0.25], 1.0, 1.0).unwrap();
        assert!((b.water_level - 1.25).abs() < 1e-12);
        assert!((b.powers[0] - 1.0).abs() < 1e-12);
        assert_eq!(b.powers[1], 0.0);
    }

    #[test]
    fn equal_spectrum_splits_evenly() {
        let a = water_fill(&[0.7; 5], 2.3, 4.0).unwrap();
        assert!(a.powers.iter().all(|p| (p - 0.8).abs() < 1e-12));
    }

    #[test]
    fn invariants_on_random_spectra() {
        let mut rng = seeded_rng(11);
        for _ in 0..500 {
            let k = rng.gen_range(1..20);
            let mut lams: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..4.0)).collect();
            lams.sort_by(|a, b| b.total_cmp(a));
            let sigma2 = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
            let q = rng.gen_range(0.5..300.0);
            let a = water_fill(&lams, sigma2, q).unwrap();
            assert!((a.total() - q).abs() <= 1e-9 * q.max(1.0));
            for (p, l) in a.powers.iter().zip(&lams) {
                assert!((p - (a.water_level - sigma2 / l).max(0.0)).abs() < 1e-9);
            }
            let oracle = water_level_by_enumeration(&lams, sigma2, q);
            assert!((a.water_level - oracle).abs() < 1e-9 * oracle.max(1.0));
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(water_fill(&[], 1.0, 1.0).is_err());
    }

    #[test]
    fn matrix_columns_scale_eigenvectors() {
        let kernel = Kernel::from_real_diagonal(&[2.0, 1.0, 0.0]);
        let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
        let alloc = water_fill(&basis.eigenvalues, 1.0, 3.0).unwrap();
        let w = water_fill_matrix(&basis, &alloc, 3).unwrap();
        assert_eq!(w.num_pilots(), 3);
        assert!((w.matrix()[(0, 0)].re - 1.75f64.sqrt()).abs() < 1e-12);
        assert!((w.matrix()[(1, 1)].re - 1.25f64.sqrt()).abs() < 1e-12);
        assert!(w.matrix().column(2).norm() == 0.0);
        let power: f64 = w.matrix().iter().map(|z| z.norm_sqr()).sum();
        assert!((power - 3.0).abs() < 1e-10);
    }

    #[test]
    fn unit_powers_give_eigenbasis() {
        let kernel = Kernel::from_real_diagonal(&[1.0, 1.0]);
        let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
        let alloc = PowerAllocation { powers: vec![1.0, 1.0], water_level: 2.0 };
        let w = water_fill_matrix(&basis, &alloc, 2).unwrap();
        assert!(max_abs(&(w.matrix() - &basis.eigenvectors)) < 1e-15);
        let bad = PowerAllocation { powers: vec![1.0], water_level: 2.0 };
        assert!(water_fill_matrix(&basis, &bad, 2).is_err());
    }
}
