//! Channel realizations and pilot reception.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::ObservationMatrix;
use crate::error::{Error, Result};
use crate::kernels::{EigenBasis, UpaGeometry};
use crate::linalg::{real, CMat, CVec, C64};

/// Random stream used for every stochastic operation in the crate.
pub type SimRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// One draw from `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Clustered multipath parameters. Angle and delay ranges are symmetric
/// half-widths of uniform laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteredChannelParams {
    pub carrier_freq: f64,
    pub num_clusters: usize,
    pub rays_per_cluster: usize,
    /// Cluster azimuth/elevation drawn from `U(-x, x)` degrees.
    pub incident_angle_deg: f64,
    /// Per-ray angle offsets drawn from `U(-x, x)` degrees.
    pub angle_spread_deg: f64,
    /// Per-cluster delay drawn from `U(-x, x)` seconds.
    pub delay_spread_s: f64,
}

impl Default for ClusteredChannelParams {
    fn default() -> Self {
        ClusteredChannelParams {
            carrier_freq: 3.5e9,
            num_clusters: 23,
            rays_per_cluster: 20,
            incident_angle_deg: 90.0,
            angle_spread_deg: 5.0,
            delay_spread_s: 30e-9,
        }
    }
}

impl ClusteredChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 || self.rays_per_cluster == 0 {
            return Err(Error::invalid("cluster and ray counts must be at least 1"));
        }
        if self.angle_spread_deg < 0.0 || self.delay_spread_s < 0.0 || self.incident_angle_deg < 0.0 {
            return Err(Error::invalid("spreads must be nonnegative"));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        Ok(())
    }
}

/// Channel vector, one complex gain per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization(pub CVec);

impl ChannelRealization {
    pub fn as_vec(&self) -> &CVec {
        &self.0
    }

    pub fn power(&self) -> f64 {
        self.0.norm_squared()
    }
}

fn axis_phasors(n: usize, rate: f64) -> Vec<C64> {
    UpaGeometry::centered_indices(n)
        .into_iter()
        .map(|m| C64::from_polar(1.0, rate * m))
        .collect()
}

/// UPA steering vector; antenna `(ix, iy)` sits at index `ix * my + iy`.
pub fn steering_vector(geom: &UpaGeometry, theta: f64, phi: f64) -> CVec {
    let k = geom.phase_scale();
    let ax = axis_phasors(geom.mx, k * theta.sin() * phi.cos());
    let ay = axis_phasors(geom.my, k * phi.sin());
    let mut a = CVec::zeros(geom.num_antennas());
    for (ix, x) in ax.iter().enumerate() {
        for (iy, y) in ay.iter().enumerate() {
            a[ix * geom.my + iy] = x * y;
        }
    }
    a
}

/// Narrowband clustered multipath draw.
///
/// `h = (1/√(C·R)) Σ_c Σ_r g_c e^{jΦ_{c,r}} e^{-j2π f_c τ_c} a(θ_c+δθ_r, φ_c+δφ_r)`
/// with `g_c ~ CN(0,1)` and independent per-ray phases `Φ ~ U(-π, π)`, so that
/// `E‖h‖² = M`.
pub fn draw_clustered_channel<R: Rng + ?Sized>(
    geom: &UpaGeometry,
    params: &ClusteredChannelParams,
    rng: &mut R,
) -> ChannelRealization {
    let m = geom.num_antennas();
    let k = geom.phase_scale();
    let deg = PI / 180.0;
    let uniform = |rng: &mut R, half: f64| if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 };

    let mut h = CVec::zeros(m);
    let mut ax = vec![C64::new(0.0, 0.0); geom.mx];
    let mut ay = vec![C64::new(0.0, 0.0); geom.my];
    let xs = UpaGeometry::centered_indices(geom.mx);
    let ys = UpaGeometry::centered_indices(geom.my);

    for _ in 0..params.num_clusters {
        let gain = complex_normal(rng);
        let theta_c = uniform(rng, params.incident_angle_deg) * deg;
        let phi_c = uniform(rng, params.incident_angle_deg) * deg;
        let tau = uniform(rng, params.delay_spread_s);
        let cluster = gain * C64::from_polar(1.0, -2.0 * PI * params.carrier_freq * tau);
        for _ in 0..params.rays_per_cluster {
            let theta = theta_c + uniform(rng, params.angle_spread_deg) * deg;
            let phi = phi_c + uniform(rng, params.angle_spread_deg) * deg;
            let ray_phase: f64 = rng.gen_range(-PI..PI);
            let coeff = cluster * C64::from_polar(1.0, ray_phase);
            let rx = k * theta.sin() * phi.cos();
            let ry = k * phi.sin();
            for (a, &x) in ax.iter_mut().zip(&xs) {
                *a = C64::from_polar(1.0, rx * x) * coeff;
            }
            for (a, &y) in ay.iter_mut().zip(&ys) {
                *a = C64::from_polar(1.0, ry * y);
            }
            for (ix, x) in ax.iter().enumerate() {
                let row = &mut h.as_mut_slice()[ix * geom.my..(ix + 1) * geom.my];
                for (slot, y) in row.iter_mut().zip(&ay) {
                    *slot += x * y;
                }
            }
        }
    }
    let norm = ((params.num_clusters * params.rays_per_cluster) as f64).sqrt();
    h /= real(norm);
    ChannelRealization(h)
}

/// `h = U_K Λ_K^{1/2} g` with `g ~ CN(0, I_K)`.
pub fn draw_gaussian_channel<R: Rng + ?Sized>(basis: &EigenBasis, rng: &mut R) -> ChannelRealization {
    let mut h = CVec::zeros(basis.ambient_dim());
    for (k, &lam) in basis.eigenvalues.iter().enumerate() {
        let g = complex_normal(rng) * lam.sqrt();
        h.axpy(g, &basis.eigenvectors.column(k), real(1.0));
    }
    ChannelRealization(h)
}

/// `y = W^H h + z`, `z ~ CN(0, σ² I_Q)`.
pub fn receive_pilots<R: Rng + ?Sized>(
    h: &ChannelRealization,
    w: &ObservationMatrix,
    sigma2: f64,
    rng: &mut R,
) -> Result<CVec> {
    let wm = w.matrix();
    if wm.nrows() != h.0.len() {
        return Err(Error::invalid(format!(
            "observation matrix has {} rows but channel has {} entries",
            wm.nrows(),
            h.0.len()
        )));
    }
    if wm.ncols() == 0 {
        return Err(Error::invalid("observation matrix has no columns"));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("noise variance must be nonnegative"));
    }
    let mut y = wm.ad_mul(&h.0);
    if sigma2 > 0.0 {
        let s = sigma2.sqrt();
        for v in y.iter_mut() {
            *v += complex_normal(rng) * s;
        }
    }
    Ok(y)
}

/// Reference power against which SNR is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrReference {
    /// `SNR = E‖h‖² / σ²`.
    #[default]
    Total,
    /// `SNR = E‖h‖² / (M σ²)`: average per-antenna channel power over noise.
    PerAntenna,
}

/// Noise variance for a target SNR given the mean channel power `E‖h‖²`.
pub fn noise_variance(mean_power: f64, snr_db: f64, reference: SnrReference, m: usize) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    match reference {
        SnrReference::Total => mean_power / snr,
        SnrReference::PerAntenna => mean_power / (m as f64 * snr),
    }
}

/// Empirical `E‖h‖²` of the clustered model.
pub fn clustered_mean_power(geom: &UpaGeometry, params: &ClusteredChannelParams, draws: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let total: crate::linalg::CompensatedSum =
        (0..draws).map(|_| draw_clustered_channel(geom, params, &mut rng).power()).collect();
    total.value() / draws.max(1) as f64
}

/// Stacks realizations as rows for CSV export.
pub fn ensemble_matrix(realizations: &[ChannelRealization]) -> CMat {
    let rows: Vec<CVec> = realizations.iter().map(|r| r.0.clone()).collect();
    crate::io::rows_to_matrix(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ObservationMatrix;
    use crate::kernels::{evd_hermitian, Kernel, DEFAULT_RANK_TOL};

    #[test]
    fn broadside_is_all_ones() {
        let g = UpaGeometry::with_ratio(4, 3, 0.125).unwrap();
        let a = steering_vector(&g, 0.0, 0.0);
        assert!(a.iter().all(|z| (z - real(1.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_entries_are_unit_modulus() {
        let g = UpaGeometry::with_ratio(5, 3, 0.3).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let t = rng.gen_range(-1.5..1.5);
            let p = rng.gen_range(-1.5..1.5);
            let a = steering_vector(&g, t, p);
            assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
            assert!((a.norm_squared() - 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_wavelength_phase_step() {
        let g = UpaGeometry::with_ratio(2, 1, 0.5).unwrap();
        let a = steering_vector(&g, PI / 6.0, 0.0);
        let step = (a[1] / a[0]).arg();
        assert!((step - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn clustered_draw_is_deterministic() {
        let g = UpaGeometry::with_ratio(4, 4, 0.125).unwrap();
        let p = ClusteredChannelParams::default();
        let a = draw_clustered_channel(&g, &p, &mut seeded_rng(9));
        let b = draw_clustered_channel(&g, &p, &mut seeded_rng(9));
        assert_eq!(a, b);
        let c = draw_clustered_channel(&g, &p, &mut seeded_rng(10));
        assert_ne!(a, c);
    }

    #[test]
    fn rank_zero_basis_draws_zero() {
        let k = Kernel::from_real_diagonal(&[0.0, 0.0]);
        let b = evd_hermitian(&k, DEFAULT_RANK_TOL).unwrap();
        let h = draw_gaussian_channel(&b, &mut seeded_rng(1));
        assert_eq!(h.power(), 0.0);
    }

    #[test]
    fn noiseless_reception() {
        let h = ChannelRealization(CVec::from_vec(vec![real(3.0), C64::new(1.0, -1.0)]));
        let w = ObservationMatrix::unit_norm(CMat::identity(2, 1)).unwrap();
        let y = receive_pilots(&h, &w, 0.0, &mut seeded_rng(0)).unwrap();
        assert_eq!(y.len(), 1);
        assert_eq!(y[0], real(3.0));
    }

    #[test]
    fn reception_dimension_mismatch() {
        let h = ChannelRealization(CVec::zeros(3));
        let w = ObservationMatrix::unit_norm(CMat::identity(2, 2)).unwrap();
        assert!(matches!(receive_pilots(&h, &w, 1.0, &mut seeded_rng(0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn snr_conversion() {
        assert!((noise_variance(64.0, 0.0, SnrReference::Total, 64) - 64.0).abs() < 1e-12);
        assert!((noise_variance(64.0, 10.0, SnrReference::PerAntenna, 64) - 0.1).abs() < 1e-12);
    }
}
