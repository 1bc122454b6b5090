//! Closed-form MSE expressions and the verifiers built on them.
//!
//! Everything here is exact algebra on spectra, allocations or Gram
//! matrices; the simulator in [`crate::experiment`] checks its empirical
//! errors against these values.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{ice_fill_spectrum, water_fill, ObservationMatrix, PilotAllocation, PowerAllocation};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{self, real, CMat};

/// Observation-matrix family an analytic MSE refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticMethod {
    Wf,
    If,
    Rnd,
}

impl AnalyticMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnalyticMethod::Wf => "wf",
            AnalyticMethod::If => "if",
            AnalyticMethod::Rnd => "rnd",
        }
    }
}

impl fmt::Display for AnalyticMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalyticMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wf" => Ok(AnalyticMethod::Wf),
            "if" => Ok(AnalyticMethod::If),
            "rnd" => Ok(AnalyticMethod::Rnd),
            other => Err(Error::config(format!("unknown analytic method {other:?}"))),
        }
    }
}

/// `Σ_k λ_k σ² / (x_k λ_k + σ²)` for per-direction observation powers `x_k`.
fn diagonal_mse(lams: &[f64], powers: &[f64], sigma2: f64) -> Result<f64> {
    if lams.len() != powers.len() {
        return Err(Error::invalid(format!(
            "spectrum has {} entries but allocation has {}",
            lams.len(),
            powers.len()
        )));
    }
    Ok(lams
        .iter()
        .zip(powers)
        .map(|(&l, &x)| if l == 0.0 { 0.0 } else { l * sigma2 / (x * l + sigma2) })
        .sum())
}

/// Water-filling MSE `Σ_k λ_k σ² / (p_k λ_k + σ²)`.
pub fn mse_waterfilling(lams: &[f64], alloc: &PowerAllocation, sigma2: f64) -> Result<f64> {
    diagonal_mse(lams, &alloc.powers, sigma2)
}

/// Ice-filling MSE `Σ_k λ_k σ² / (n_k λ_k + σ²)`.
pub fn mse_icefilling(lams: &[f64], alloc: &PilotAllocation, sigma2: f64) -> Result<f64> {
    diagonal_mse(lams, &alloc.reuse_f64(), sigma2)
}

/// Same expression for an arbitrary reuse vector.
pub fn mse_from_counts(lams: &[f64], counts: &[f64], sigma2: f64) -> Result<f64> {
    diagonal_mse(lams, counts, sigma2)
}

/// Random-observation MSE `Σ_k λ_k σ² / ((Q/M) λ_k + σ²)`.
pub fn mse_random(lams: &[f64], q: usize, m: usize, sigma2: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("antenna count must be positive"));
    }
    let psi = q as f64 / m as f64;
    diagonal_mse(lams, &vec![psi; lams.len()], sigma2)
}

/// Upper bound on `|δ_wf - δ_if|` from `|n_k - p_k| < 1`:
/// `Σ_k λ_k² σ² / ((p_k λ_k + σ²)((p_k - 1) λ_k + σ²))`.
///
/// Only valid when every `p_k > 1`.
pub fn mse_gap_bound(lams: &[f64], alloc: &PowerAllocation, sigma2: f64) -> Result<f64> {
    if lams.len() != alloc.powers.len() {
        return Err(Error::invalid("spectrum and allocation lengths differ"));
    }
    if let Some(p) = alloc.powers.iter().find(|&&p| p <= 1.0) {
        return Err(Error::BoundNotApplicable(format!("power {p} is not above 1")));
    }
    Ok(lams
        .iter()
        .zip(&alloc.powers)
        .map(|(&l, &p)| (l * l * sigma2 / ((p * l + sigma2) * ((p - 1.0) * l + sigma2))).abs())
        .sum())
}

/// `max_k |n_k - p_k|`.
pub fn verify_quantization(n: &PilotAllocation, p: &PowerAllocation) -> Result<f64> {
    if n.reuse.len() != p.powers.len() {
        return Err(Error::invalid("allocation lengths differ"));
    }
    Ok(n.reuse
        .iter()
        .zip(&p.powers)
        .map(|(&n, &p)| (n as f64 - p).abs())
        .fold(0.0, f64::max))
}

/// Trace of the posterior covariance for observation `W` under prior `Σ`.
pub fn posterior_trace(w: &ObservationMatrix, prior: &Kernel, sigma2: f64) -> Result<f64> {
    let post = crate::design::info::posterior_covariance(w.matrix(), prior.matrix(), sigma2)?;
    Ok(linalg::trace_re(&post))
}

/// Operators of the mismatched-kernel MSE.
///
/// `Π = (W^H Σ̂ W + σ² I)^{-1} W^H Σ̂`; `Ω` and `Ξ` are the functions of the
/// Gram matrix `W W^H` with `W Π = Ω Σ̂` and `Π^H Π = Σ̂ Ξ Σ̂`.
#[derive(Debug, Clone)]
pub struct MismatchOperators {
    pub pi: CMat,
    pub omega: CMat,
    pub xi: CMat,
}

impl MismatchOperators {
    pub fn new(w: &CMat, used: &Kernel, sigma2: f64) -> Result<Self> {
        let pi = projection_pi(w, used.matrix(), sigma2)?;
        let (omega, xi) = omega_xi(&(w * w.adjoint()), used.matrix(), sigma2)?;
        Ok(MismatchOperators { pi, omega, xi })
    }
}

fn projection_pi(w: &CMat, used: &CMat, sigma2: f64) -> Result<CMat> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let whs = w.adjoint() * used;
    let mut a = &whs * w;
    for i in 0..a.nrows() {
        a[(i, i)] += real(sigma2);
    }
    linalg::symmetrize(&mut a);
    Ok(linalg::cholesky(&a)?.solve(&whs))
}

fn omega_xi(gram: &CMat, used: &CMat, sigma2: f64) -> Result<(CMat, CMat)> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let used_inv = linalg::inverse_hpd(used)
        .map_err(|_| Error::invalid("kernel used by the estimator must be invertible"))?;
    let s2 = sigma2;
    let inner = linalg::inverse_hpd(&(used_inv + gram / real(s2)))?;
    let bg = &inner * gram;
    let omega = gram / real(s2) - gram * &bg / real(s2 * s2);
    let xi = gram / real(s2 * s2) - gram * &bg * real(2.0 / (s2 * s2 * s2)) + gram * &bg * &bg / real(s2.powi(4));
    Ok((omega, xi))
}

/// MSE of the MMSE estimator run with kernel `used` when the channel follows
/// `truth`: `Tr((Π^H W^H - I) Σ_h (W Π - I)) + σ² Tr(Π^H Π)`.
pub fn mse_mismatched(w: &ObservationMatrix, used: &Kernel, truth: &Kernel, sigma2: f64) -> Result<f64> {
    let wm = w.matrix();
    let pi = projection_pi(wm, used.matrix(), sigma2)?;
    let m = wm.nrows();
    let e = wm * &pi - linalg::identity(m);
    let bias = linalg::trace_re(&(e.adjoint() * truth.matrix() * &e));
    let noise = pi.iter().map(|z| z.norm_sqr()).sum::<f64>() * sigma2;
    Ok(bias + noise)
}

/// The same MSE written through the Gram matrix `W W^H`.
pub fn mse_mismatched_gram(gram: &CMat, used: &Kernel, truth: &Kernel, sigma2: f64) -> Result<f64> {
    let (omega, xi) = omega_xi(gram, used.matrix(), sigma2)?;
    let s = used.matrix();
    let m = s.nrows();
    let e = &omega * s - linalg::identity(m);
    let bias = linalg::trace_re(&(e.adjoint() * truth.matrix() * &e));
    let noise = sigma2 * linalg::trace_re(&(s * &xi * s));
    Ok(bias + noise)
}

/// Per-direction term of the statistical-kernel MSE with observation
/// power `x` on a direction of true eigenvalue `lam`:
/// `σ² (λσ² + x(λ + σ_h²)²) / (x(λ + σ_h²) + σ²)²`.
fn statistical_term(lam: f64, x: f64, sigma_h2: f64, sigma2: f64) -> f64 {
    let shifted = lam + sigma_h2;
    sigma2 * (lam * sigma2 + x * shifted * shifted) / (x * shifted + sigma2).powi(2)
}

fn validate_padded(lams: &[f64], m: usize) -> Result<()> {
    if lams.len() != m {
        return Err(Error::invalid(format!("spectrum must be padded to M = {m} entries")));
    }
    if lams.windows(2).any(|w| w[0] < w[1]) || lams.iter().any(|&l| l < 0.0) {
        return Err(Error::invalid("spectrum must be nonnegative and descending"));
    }
    Ok(())
}

/// Per-direction observation powers each design spends under the statistical
/// kernel `Σ_h + σ_h² I`.
pub fn statistical_allocation(
    method: AnalyticMethod,
    lams: &[f64],
    sigma_h2: f64,
    sigma2: f64,
    q: usize,
) -> Result<Vec<f64>> {
    let m = lams.len();
    let shifted: Vec<f64> = lams.iter().map(|&l| l + sigma_h2).collect();
    let live: Vec<f64> = shifted.iter().cloned().take_while(|&s| s > 0.0).collect();
    let mut powers = vec![0.0; m];
    match method {
        AnalyticMethod::Wf => {
            let alloc = water_fill(&live, sigma2, q as f64)?;
            powers[..live.len()].copy_from_slice(&alloc.powers);
        }
        AnalyticMethod::If => {
            let (alloc, _) = ice_fill_spectrum(&live, sigma2, q)?;
            for (p, n) in powers.iter_mut().zip(alloc.reuse) {
                *p = n as f64;
            }
        }
        AnalyticMethod::Rnd => powers.fill(q as f64 / m as f64),
    }
    Ok(powers)
}

/// Achievable MSE under the statistical kernel for `method`.
///
/// `lams` is the true spectrum padded with zeros to length `M`. Water-filling
/// and ice-filling allocate over the shifted levels `λ_m + σ_h²`; the random
/// design spends `Q/M` on every direction. Zero-eigenvalue directions only
/// contribute through `σ_h²`.
pub fn mse_statistical(
    method: AnalyticMethod,
    lams: &[f64],
    sigma_h2: f64,
    sigma2: f64,
    q: usize,
    m: usize,
) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("pilot count must be positive"));
    }
    if !(sigma_h2 >= 0.0) || !(sigma2 > 0.0) {
        return Err(Error::invalid("variances must be positive"));
    }
    validate_padded(lams, m)?;
    let powers = statistical_allocation(method, lams, sigma_h2, sigma2, q)?;
    Ok(lams
        .iter()
        .zip(&powers)
        .map(|(&l, &x)| if l == 0.0 && sigma_h2 == 0.0 { 0.0 } else { statistical_term(l, x, sigma_h2, sigma2) })
        .sum())
}

/// Statistical-kernel water-filling MSE with power confined to the `K`
/// true eigendirections, using the perfect-kernel powers.
pub fn mse_rank_forced(lams: &[f64], sigma_h2: f64, sigma2: f64, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("pilot count must be positive"));
    }
    let alloc = water_fill(lams, sigma2, q as f64)?;
    Ok(lams
        .iter()
        .zip(&alloc.powers)
        .map(|(&l, &p)| statistical_term(l, p, sigma_h2, sigma2))
        .sum())
}

/// Kernel regime of an asymptotic sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Perfect,
    Statistical { sigma_h2: f64 },
    /// Kernel error so large that the prior carries no structure.
    StatisticalInfiniteError,
}

/// Kernel error variance standing in for `σ_h² → ∞`, relative to `λ_1`.
const INFINITE_ERROR_SCALE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticParams {
    /// True spectrum; padded with zeros to `M` where needed.
    pub spectrum: Vec<f64>,
    pub sigma2: f64,
    pub m: usize,
    pub q_grid: Vec<usize>,
}

/// Least-squares fit of `ln y = ln c + s ln x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub slope: f64,
    pub prefactor: f64,
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares on log-log data; needs at least five points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<ScalingReport> {
    if points.len() < 5 {
        return Err(Error::invalid("a scaling fit needs at least five points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive data"));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(ScalingReport { slope, prefactor: intercept.exp(), points: points.to_vec() })
}

/// Evaluates the exact MSE of `method` over the Q grid and fits its
/// log-log scaling.
pub fn asymptotic_mse(method: AnalyticMethod, regime: Regime, params: &AsymptoticParams) -> Result<ScalingReport> {
    let mut lams = params.spectrum.clone();
    lams.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::with_capacity(params.q_grid.len());
    for &q in &params.q_grid {
        let delta = match regime {
            Regime::Perfect => {
                let live: Vec<f64> = lams.iter().cloned().filter(|&l| l > 0.0).collect();
                match method {
                    AnalyticMethod::Wf => {
                        let p = water_fill(&live, params.sigma2, q as f64)?;
                        mse_waterfilling(&live, &p, params.sigma2)?
                    }
                    AnalyticMethod::If => {
                        let (n, _) = ice_fill_spectrum(&live, params.sigma2, q)?;
                        mse_icefilling(&live, &n, params.sigma2)?
                    }
                    AnalyticMethod::Rnd => mse_random(&live, q, params.m, params.sigma2)?,
                }
            }
            Regime::Statistical { sigma_h2 } => {
                let padded = pad(&lams, params.m)?;
                mse_statistical(method, &padded, sigma_h2, params.sigma2, q, params.m)?
            }
            Regime::StatisticalInfiniteError => {
                let padded = pad(&lams, params.m)?;
                let big = INFINITE_ERROR_SCALE * lams.first().copied().unwrap_or(1.0).max(1.0);
                mse_statistical(method, &padded, big, params.sigma2, q, params.m)?
            }
        };
        points.push((q as f64, delta));
    }
    fit_loglog(&points)
}

/// Pads a descending spectrum with zeros to length `m`.
pub fn pad(lams: &[f64], m: usize) -> Result<Vec<f64>> {
    if lams.len() > m {
        return Err(Error::invalid("spectrum longer than M"));
    }
    let mut out = lams.to_vec();
    out.resize(m, 0.0);
    Ok(out)
}

/// One row of an analytic sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub method: AnalyticMethod,
    pub q: usize,
    pub snr_db: Option<f64>,
    pub sigma_h2: f64,
    pub delta: f64,
}

pub const ANALYTIC_CSV_VERSION: &str = "icefill-analytic/1";

/// Writes `method,Q,SNR,sigma_h2,delta` rows; an empty SNR cell means the
/// noise variance was given directly.
pub fn write_analytic_csv<W: Write>(out: &mut W, rows: &[AnalyticRow]) -> Result<()> {
    writeln!(out, "# {ANALYTIC_CSV_VERSION}")?;
    writeln!(out, "method,Q,SNR,sigma_h2,delta")?;
    for r in rows {
        let snr = r.snr_db.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.method, r.q, snr, r.sigma_h2, r.delta)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelLabel;

    #[test]
    fn lemma_examples() {
        let p = PowerAllocation { powers: vec![1.75, 1.25], water_level: 2.25 };
        assert!((mse_waterfilling(&[2.0, 1.0], &p, 1.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        let n = PilotAllocation { reuse: vec![2, 1], order: vec![0, 1, 0], ice_levels: vec![2.5, 2.0] };
        assert!((mse_icefilling(&[2.0, 1.0], &n, 1.0).unwrap() - 0.9).abs() < 1e-15);
        assert!((mse_random(&[2.0, 1.0], 4, 2, 1.0).unwrap() - (0.4 + 1.0 / 3.0)).abs() < 1e-15);
        assert!((mse_random(&[2.0, 1.0], 0, 2, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let zero = PowerAllocation { powers: vec![0.0, 0.0], water_level: 0.0 };
        assert!((mse_waterfilling(&[2.0, 1.0], &zero, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let huge = PowerAllocation { powers: vec![1e15, 1e15], water_level: 1e15 };
        assert!(mse_waterfilling(&[2.0, 1.0], &huge, 1.0).unwrap() < 1e-14);
        assert!(mse_waterfilling(&[2.0], &p, 1.0).is_err());
    }

    #[test]
    fn gap_bound_example() {
        let p = PowerAllocation { powers: vec![1.75, 1.25], water_level: 2.25 };
        let b = mse_gap_bound(&[2.0, 1.0], &p, 1.0).unwrap();
        let expected = 4.0 / (4.5 * 2.5) + 1.0 / (2.25 * 1.25);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 0.7111).abs() < 1e-4);
        assert!(0.9 - 8.0 / 9.0 <= b);
        let dry = PowerAllocation { powers: vec![1.5, 0.5], water_level: 2.0 };
        assert!(matches!(mse_gap_bound(&[2.0, 1.0], &dry, 1.0), Err(Error::BoundNotApplicable(_))));
    }

    #[test]
    fn single_channel_gap_is_zero() {
        let p = water_fill(&[1.7], 0.4, 9.0).unwrap();
        let (n, _) = ice_fill_spectrum(&[1.7], 0.4, 9).unwrap();
        assert_eq!(verify_quantization(&n, &p).unwrap(), 0.0);
        let gap = mse_waterfilling(&[1.7], &p, 0.4).unwrap() - mse_icefilling(&[1.7], &n, 0.4).unwrap();
        assert!(gap.abs() < 1e-15);
    }

    #[test]
    fn quantization_example() {
        let p = PowerAllocation { powers: vec![1.75, 1.25], water_level: 2.25 };
        let n = PilotAllocation { reuse: vec![2, 1], order: vec![0, 1, 0], ice_levels: vec![2.5, 2.0] };
        assert!((verify_quantization(&n, &p).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn scalar_mismatch() {
        let w = ObservationMatrix::unit_norm(CMat::identity(1, 1)).unwrap();
        let truth = Kernel::from_real_diagonal(&[2.0]);
        let used = Kernel::from_real_diagonal(&[3.0]);
        let d = mse_mismatched(&w, &used, &truth, 1.0).unwrap();
        assert!((d - 0.6875).abs() < 1e-14);
        let dg = mse_mismatched_gram(&w.gram(), &used, &truth, 1.0).unwrap();
        assert!((dg - 0.6875).abs() < 1e-14);
        let matched = mse_mismatched(&w, &truth, &truth, 1.0).unwrap();
        assert!((matched - 2.0 / 3.0).abs() < 1e-14);
        let ops = MismatchOperators::new(w.matrix(), &used, 1.0).unwrap();
        assert!((ops.pi[(0, 0)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gram_with_no_observation_returns_prior_trace() {
        let truth = Kernel::from_real_diagonal(&[2.0, 0.5, 0.0]);
        let used = Kernel::new(truth.matrix() + linalg::identity(3) * real(0.1), KernelLabel::Statistical).unwrap();
        let d = mse_mismatched_gram(&CMat::zeros(3, 3), &used, &truth, 1.0).unwrap();
        assert!((d - 2.5).abs() < 1e-14);
    }

    #[test]
    fn statistical_examples() {
        let d = mse_statistical(AnalyticMethod::Wf, &[2.0, 0.0], 0.5, 1.0, 2, 2).unwrap();
        let expected = 13.25 / 30.25 + 0.05 / 1.21;
        assert!((d - expected).abs() < 1e-14);
        assert!((d - 0.4793).abs() < 1e-4);
        let forced = mse_rank_forced(&[2.0], 0.5, 1.0, 2).unwrap();
        assert!(forced < d);

        let lams = [2.0, 1.0, 0.0];
        let p = water_fill(&lams[..2], 1.0, 3.0).unwrap();
        let perfect = mse_waterfilling(&lams[..2], &p, 1.0).unwrap();
        let reduced = mse_statistical(AnalyticMethod::Wf, &lams, 0.0, 1.0, 3, 3).unwrap();
        assert!((perfect - reduced).abs() < 1e-14);
        assert!((mse_rank_forced(&lams[..2], 0.0, 1.0, 3).unwrap() - perfect).abs() < 1e-14);
        assert!(mse_statistical(AnalyticMethod::Wf, &lams, 0.1, 1.0, 0, 3).is_err());
        assert!(mse_statistical(AnalyticMethod::Wf, &[1.0, 2.0], 0.1, 1.0, 2, 2).is_err());
    }

    #[test]
    fn loglog_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|i| {
            let x = (1 << i) as f64;
            (x, 3.0 * x.powf(-1.5))
        }).collect();
        let r = fit_loglog(&pts).unwrap();
        assert!((r.slope + 1.5).abs() < 1e-12);
        assert!((r.prefactor - 3.0).abs() < 1e-10);
        assert!(fit_loglog(&pts[..4]).is_err());
    }

    #[test]
    fn analytic_csv_layout() {
        let mut buf = Vec::new();
        let rows = [AnalyticRow { method: AnalyticMethod::Wf, q: 3, snr_db: None, sigma_h2: 0.0, delta: 0.5 }];
        write_analytic_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "method,Q,SNR,sigma_h2,delta");
        assert_eq!(text.lines().nth(2).unwrap(), "wf,3,,0,0.5");
    }
}
