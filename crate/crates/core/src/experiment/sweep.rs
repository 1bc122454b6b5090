use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{
    mse_icefilling, mse_mismatched, mse_mismatched_gram, mse_random, mse_statistical, mse_waterfilling, pad,
    AnalyticMethod,
};
use crate::channel::{
    clustered_mean_power, draw_clustered_channel, draw_gaussian_channel, noise_variance, receive_pilots, seeded_rng,
    ChannelRealization, SimRng,
};
use crate::design::{
    dft_matrix, ice_fill, mm_design, random_matrix, top_q_matrix, water_fill, water_fill_matrix, Designer,
    ObservationMatrix, PilotAllocation, PowerAllocation, RandomMode,
};
use crate::error::{Error, Result};
use crate::estimate::{omp_estimate, LsEstimator, MmseEstimator};
use crate::io::read_matrix;
use crate::kernels::{
    bessel_kernel, evd_hermitian, exponential_kernel, statistical_kernel, CovarianceAccumulator, EigenBasis, Kernel,
    KernelLabel, UpaGeometry, DEFAULT_RANK_TOL,
};
use crate::linalg::{self, real, CMat, CompensatedSum};

use super::{as_config, ChannelSource, EstimatorChoice, ExperimentConfig, KernelChoice, SweepAxis};

pub const SWEEP_CSV_VERSION: &str = "icefill-sweep/1";

// Auxiliary streams sit far above any trial index.
const KERNEL_SEED_OFFSET: u64 = 1 << 40;
const POWER_SEED_OFFSET: u64 = (1 << 40) + (1 << 20);
const MM_SEED_OFFSET: u64 = (1 << 40) + (1 << 21);
const COVARIANCE_CHUNKS: u64 = 16;

/// Share of the kernel trace the default OMP sparsity has to cover.
const OMP_ENERGY: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub designer: Designer,
    pub estimator: EstimatorChoice,
    pub value: f64,
    /// `10 log10 E(‖h - ĥ‖² / ‖h‖²)`.
    pub nmse_db: f64,
    /// `E‖h - ĥ‖²`.
    pub mse: f64,
    /// Closed-form `E‖h - ĥ‖²` where one applies.
    pub analytic_delta: Option<f64>,
    /// `E‖h‖²` at this point.
    pub signal_power: f64,
    pub trials: usize,
    /// Wall time of the whole sweep point, shared by its rows.
    pub wall_time_s: f64,
}

impl SweepRow {
    /// `10 log10(δ / E‖h‖²)`.
    pub fn analytic_nmse_db(&self) -> Option<f64> {
        self.analytic_delta.map(|d| 10.0 * (d / self.signal_power).log10())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub base_seed: u64,
    pub include_timing: bool,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, designer: Designer, estimator: EstimatorChoice, value: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.designer == designer && r.estimator == estimator && r.value == value)
    }
}

/// Ground truth at one geometry: the kernel channels are drawn from (or
/// estimated from, for clustered channels) and the mean channel power.
struct Truth {
    geom: UpaGeometry,
    kernel: Kernel,
    basis: EigenBasis,
    mean_power: f64,
}

impl Truth {
    fn build(cfg: &ExperimentConfig, geom: UpaGeometry) -> Result<Self> {
        let m = geom.num_antennas();
        let kernel = match &cfg.channel.kernel_file {
            Some(path) if cfg.channel.source == ChannelSource::Gaussian => {
                let k = Kernel::new(read_matrix(path)?, KernelLabel::Perfect).map_err(as_config)?;
                if k.dim() != m {
                    return Err(Error::config(format!(
                        "kernel file is {}x{} but the geometry has {m} antennas",
                        k.dim(),
                        k.dim()
                    )));
                }
                k
            }
            _ => clustered_covariance(cfg, &geom)?.with_label(KernelLabel::Perfect),
        };
        let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
        let mean_power = match cfg.channel.source {
            ChannelSource::Gaussian => kernel.trace(),
            ChannelSource::Clustered => clustered_mean_power(
                &geom,
                &cfg.channel.clustered,
                cfg.channel.power_draws,
                cfg.base_seed.wrapping_add(POWER_SEED_OFFSET),
            ),
        };
        if !(mean_power > 0.0) {
            return Err(Error::numeric("mean channel power is not positive"));
        }
        Ok(Truth { geom, kernel, basis, mean_power })
    }

    fn draw(&self, cfg: &ExperimentConfig, rng: &mut SimRng) -> ChannelRealization {
        match cfg.channel.source {
            ChannelSource::Gaussian => draw_gaussian_channel(&self.basis, rng),
            ChannelSource::Clustered => draw_clustered_channel(&self.geom, &cfg.channel.clustered, rng),
        }
    }
}

/// Sample covariance of clustered draws, accumulated in fixed chunks with
/// their own streams so the result does not depend on scheduling.
fn clustered_covariance(cfg: &ExperimentConfig, geom: &UpaGeometry) -> Result<Kernel> {
    let draws = cfg.channel.covariance_draws as u64;
    let m = geom.num_antennas();
    let params = &cfg.channel.clustered;
    let parts: Vec<CovarianceAccumulator> = (0..COVARIANCE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let lo = draws * c / COVARIANCE_CHUNKS;
            let hi = draws * (c + 1) / COVARIANCE_CHUNKS;
            let mut rng = seeded_rng(cfg.base_seed.wrapping_add(KERNEL_SEED_OFFSET + c));
            let mut acc = CovarianceAccumulator::new(m);
            for _ in lo..hi {
                acc.push(draw_clustered_channel(geom, params, &mut rng).as_vec());
            }
            acc
        })
        .collect();
    let mut total = CovarianceAccumulator::new(m);
    for p in &parts {
        total.merge(p);
    }
    total.finish()
}

/// Everything fixed at one sweep point.
struct Point {
    q: usize,
    sigma2: f64,
    sigma_h2: Option<f64>,
    used: Kernel,
    used_basis: EigenBasis,
    dictionary: Option<CMat>,
}

enum Design {
    Fixed { w: ObservationMatrix, allocation: Allocation },
    Random(RandomMode),
}

enum Allocation {
    Water(PowerAllocation),
    Ice(PilotAllocation),
    None,
}

enum Prepared {
    Mmse(Option<MmseEstimator>),
    Ls(LsEstimator),
    Omp(usize),
}

struct Plan {
    designer: Designer,
    design: Design,
    estimators: Vec<(EstimatorChoice, Prepared)>,
}

fn used_kernel(cfg: &ExperimentConfig, truth: &Truth, sigma_h2: Option<f64>) -> Result<Kernel> {
    Ok(match cfg.kernel {
        KernelChoice::Perfect => truth.kernel.clone(),
        KernelChoice::Statistical { .. } => statistical_kernel(&truth.kernel, sigma_h2.unwrap_or(0.0))?,
        KernelChoice::Exponential { eta1 } => exponential_kernel(&truth.geom, eta1)?,
        KernelChoice::Bessel { eta2 } => bessel_kernel(&truth.geom, eta2)?,
    })
}

fn design(cfg: &ExperimentConfig, designer: Designer, point: &Point) -> Result<Design> {
    let m = point.used.dim();
    let q = point.q;
    let too_many = || Error::config(format!("designer {designer} needs Q <= M, got Q = {q}, M = {m}"));
    Ok(match designer {
        Designer::WaterFilling => {
            let alloc = water_fill(&point.used_basis.eigenvalues, point.sigma2, q as f64)?;
            let w = water_fill_matrix(&point.used_basis, &alloc, q)?;
            Design::Fixed { w, allocation: Allocation::Water(alloc) }
        }
        Designer::IceFilling => {
            let (w, alloc) = ice_fill(&point.used_basis, point.sigma2, q)?;
            Design::Fixed { w, allocation: Allocation::Ice(alloc) }
        }
        Designer::Mm => {
            let mut rng = seeded_rng(cfg.base_seed.wrapping_add(MM_SEED_OFFSET));
            let w = mm_design(&point.used, point.sigma2, q, &cfg.mm, &mut rng)?;
            Design::Fixed { w, allocation: Allocation::None }
        }
        Designer::TopQ => {
            if q > m {
                return Err(too_many());
            }
            Design::Fixed { w: top_q_matrix(&point.used_basis, q)?, allocation: Allocation::None }
        }
        Designer::Dft => {
            if q > m {
                return Err(too_many());
            }
            let full = dft_matrix(m)?.into_matrix();
            let w = ObservationMatrix::unit_norm(full.columns(0, q).into_owned())?;
            Design::Fixed { w, allocation: Allocation::None }
        }
        Designer::RandomGaussian => Design::Random(RandomMode::GaussianUnitNorm),
        Designer::RandomPhase => Design::Random(RandomMode::PhaseOnly),
    })
}

/// Numerical rank of `W`, which bounds how many atoms OMP can refit.
fn observation_rank(w: &ObservationMatrix) -> usize {
    let sv = w.matrix().singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

/// Default sparsity: the number of leading kernel eigenvalues holding
/// `OMP_ENERGY` of the trace, capped by what `W` can resolve.
fn omp_sparsity(choice: Option<usize>, design: &Design, point: &Point) -> Result<usize> {
    let cap = match design {
        Design::Fixed { w, .. } => observation_rank(w),
        Design::Random(_) => point.q.min(point.used.dim()),
    };
    let s = match choice {
        Some(s) => s,
        None => {
            let lams = &point.used_basis.eigenvalues;
            let total: f64 = lams.iter().sum();
            let mut acc = 0.0;
            lams.iter().take_while(|&&l| {
                let below = acc < OMP_ENERGY * total;
                acc += l;
                below
            })
            .count()
            .clamp(1, cap.max(1))
        }
    };
    if s > point.q {
        return Err(Error::config(format!("omp sparsity {s} exceeds Q = {}", point.q)));
    }
    Ok(s)
}

fn prepare(design: &Design, estimator: EstimatorChoice, point: &Point) -> Result<Prepared> {
    Ok(match (estimator, design) {
        (EstimatorChoice::Mmse, Design::Fixed { w, .. }) => {
            Prepared::Mmse(Some(MmseEstimator::new(w, &point.used, point.sigma2)?))
        }
        (EstimatorChoice::Mmse, Design::Random(_)) => Prepared::Mmse(None),
        (EstimatorChoice::Ls, Design::Fixed { w, .. }) => {
            if w.num_pilots() != w.num_antennas() {
                return Err(Error::config("estimator ls needs Q = M"));
            }
            Prepared::Ls(LsEstimator::new(w)?)
        }
        (EstimatorChoice::Ls, Design::Random(_)) => {
            return Err(Error::config("estimator ls cannot be paired with a random design"));
        }
        (EstimatorChoice::Omp(s), _) => Prepared::Omp(omp_sparsity(s, design, point)?),
    })
}

fn analytic_method(designer: Designer) -> Option<AnalyticMethod> {
    match designer {
        Designer::WaterFilling => Some(AnalyticMethod::Wf),
        Designer::IceFilling => Some(AnalyticMethod::If),
        Designer::RandomGaussian | Designer::RandomPhase => Some(AnalyticMethod::Rnd),
        _ => None,
    }
}

/// Closed-form MSE of a (designer, estimator) pair: the diagonal
/// expressions for eigen-aligned and random designs under the perfect and
/// statistical kernels, the mismatched-kernel posterior for everything else
/// with a fixed `W`, and `σ² Tr((W^H W)^{-1})` for least squares.
fn analytic_delta(
    cfg: &ExperimentConfig,
    truth: &Truth,
    point: &Point,
    designer: Designer,
    design: &Design,
    estimator: EstimatorChoice,
) -> Result<Option<f64>> {
    let m = truth.kernel.dim();
    let lams = &truth.basis.eigenvalues;
    match estimator {
        EstimatorChoice::Omp(_) => return Ok(None),
        EstimatorChoice::Ls => {
            let Design::Fixed { w, .. } = design else { return Ok(None) };
            let g = w.matrix().adjoint() * w.matrix();
            return Ok(Some(point.sigma2 * linalg::trace_re(&linalg::inverse_hpd(&g)?)));
        }
        EstimatorChoice::Mmse => {}
    }
    let method = analytic_method(designer);
    let delta = match (cfg.kernel, method, design) {
        (KernelChoice::Perfect, Some(_), Design::Fixed { allocation: Allocation::Water(p), .. }) => {
            mse_waterfilling(lams, p, point.sigma2)?
        }
        (KernelChoice::Perfect, Some(_), Design::Fixed { allocation: Allocation::Ice(n), .. }) => {
            mse_icefilling(lams, n, point.sigma2)?
        }
        (KernelChoice::Perfect, Some(AnalyticMethod::Rnd), _) => mse_random(lams, point.q, m, point.sigma2)?,
        (KernelChoice::Statistical { .. }, Some(method), _) => mse_statistical(
            method,
            &pad(lams, m)?,
            point.sigma_h2.unwrap_or(0.0),
            point.sigma2,
            point.q,
            m,
        )?,
        (_, _, Design::Fixed { w, .. }) => mse_mismatched(w, &point.used, &truth.kernel, point.sigma2)?,
        (_, _, Design::Random(_)) => {
            let gram = linalg::identity(m) * real(point.q as f64 / m as f64);
            mse_mismatched_gram(&gram, &point.used, &truth.kernel, point.sigma2)?
        }
    };
    Ok(Some(delta))
}

/// Squared errors and normalized errors of every (designer, estimator)
/// pair, in plan order, for one trial.
fn run_trial(cfg: &ExperimentConfig, truth: &Truth, point: &Point, plans: &[Plan], seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = seeded_rng(seed);
    let h = truth.draw(cfg, &mut rng);
    let power = h.power();
    if !(power > 0.0) {
        return Err(Error::numeric("drew an all-zero channel"));
    }
    let m = truth.kernel.dim();
    let mut out = Vec::new();
    for plan in plans {
        let drawn;
        let w = match &plan.design {
            Design::Fixed { w, .. } => w,
            Design::Random(mode) => {
                drawn = random_matrix(m, point.q, *mode, &mut rng)?;
                &drawn
            }
        };
        let y = receive_pilots(&h, w, point.sigma2, &mut rng)?;
        for (_, prepared) in &plan.estimators {
            let h_hat = match prepared {
                Prepared::Mmse(Some(est)) => est.estimate(&y)?.posterior_mean,
                Prepared::Mmse(None) => MmseEstimator::new(w, &point.used, point.sigma2)?.estimate(&y)?.posterior_mean,
                Prepared::Ls(est) => est.estimate(&y)?,
                Prepared::Omp(s) => {
                    let dict = point.dictionary.as_ref().expect("dictionary built for omp");
                    omp_estimate(w, dict, &y, *s)?
                }
            };
            let err = (&h_hat - h.as_vec()).norm_squared();
            out.push((err, err / power));
        }
    }
    Ok(out)
}

/// Unitary 2-D DFT matching the row-major antenna index `ix·My + iy`.
fn dft_dictionary(geom: &UpaGeometry) -> Result<CMat> {
    let fx = dft_matrix(geom.mx)?.into_matrix();
    let fy = dft_matrix(geom.my)?.into_matrix();
    Ok(linalg::kron(&fx, &fy))
}

/// Runs every (designer, estimator) pair at every axis value.
///
/// Per sweep point the true kernel is built (clustered sample covariances
/// are computed once per geometry), the noise variance follows from the SNR
/// and the mean channel power, the designers work on the configured prior
/// kernel, and `trials` channels are drawn with trial `t` seeded by
/// `base_seed + t`. Trials run in parallel; their results are reduced in
/// trial order with compensated summation, so output does not depend on
/// the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut cached: Option<(f64, Truth)> = None;
    for &value in &cfg.sweep.values {
        let started = Instant::now();
        let spacing = match cfg.sweep.axis {
            SweepAxis::Spacing => value,
            _ => cfg.geometry.d_over_lambda,
        };
        if cached.as_ref().map(|(d, _)| *d != spacing).unwrap_or(true) {
            let geom = UpaGeometry::with_ratio(cfg.geometry.mx, cfg.geometry.my, spacing).map_err(as_config)?;
            cached = Some((spacing, Truth::build(cfg, geom)?));
        }
        let truth = &cached.as_ref().expect("truth cached above").1;
        let m = truth.kernel.dim();

        let snr_db = if cfg.sweep.axis == SweepAxis::SnrDb { value } else { cfg.sweep.snr_db };
        let q = if cfg.sweep.axis == SweepAxis::Q { value as usize } else { cfg.sweep.q };
        let sigma_h2 = match cfg.kernel {
            KernelChoice::Statistical { sigma_h2_db } => {
                let db = if cfg.sweep.axis == SweepAxis::SigmaH2 { value } else { sigma_h2_db };
                Some(truth.kernel.trace() / m as f64 * 10f64.powf(db / 10.0))
            }
            _ => None,
        };
        let sigma2 = noise_variance(truth.mean_power, snr_db, cfg.channel.snr_reference, m);
        let used = used_kernel(cfg, truth, sigma_h2)?;
        let used_basis = evd_hermitian(&used, DEFAULT_RANK_TOL)?;
        let needs_dictionary = cfg.estimators.iter().any(|e| matches!(e, EstimatorChoice::Omp(_)));
        let dictionary = if needs_dictionary { Some(dft_dictionary(&truth.geom)?) } else { None };
        let point = Point { q, sigma2, sigma_h2, used, used_basis, dictionary };

        let mut plans = Vec::with_capacity(cfg.designers.len());
        for &designer in &cfg.designers {
            let design = design(cfg, designer, &point)?;
            let estimators = cfg
                .estimators
                .iter()
                .map(|&e| prepare(&design, e, &point).map(|p| (e, p)))
                .collect::<Result<Vec<_>>>()?;
            plans.push(Plan { designer, design, estimators });
        }

        let per_trial: Vec<Vec<(f64, f64)>> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, truth, &point, &plans, cfg.base_seed.wrapping_add(t)))
            .collect::<Result<_>>()?;

        let wall = started.elapsed().as_secs_f64();
        let mut slot = 0;
        for plan in &plans {
            for &(estimator, _) in &plan.estimators {
                let mut err = CompensatedSum::default();
                let mut ratio = CompensatedSum::default();
                for trial in &per_trial {
                    err.add(trial[slot].0);
                    ratio.add(trial[slot].1);
                }
                let n = cfg.trials as f64;
                rows.push(SweepRow {
                    designer: plan.designer,
                    estimator,
                    value,
                    nmse_db: 10.0 * (ratio.value() / n).log10(),
                    mse: err.value() / n,
                    analytic_delta: analytic_delta(cfg, truth, &point, plan.designer, &plan.design, estimator)?,
                    signal_power: truth.mean_power,
                    trials: cfg.trials,
                    wall_time_s: wall,
                });
                slot += 1;
            }
        }
    }
    Ok(SweepResult { axis: cfg.sweep.axis, base_seed: cfg.base_seed, include_timing: cfg.include_timing, rows })
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Versioned CSV; empty analytic cells mean no closed form applies.
pub fn write_sweep_csv<W: Write>(out: &mut W, result: &SweepResult) -> Result<()> {
    writeln!(out, "# {SWEEP_CSV_VERSION} axis={} base_seed={}", result.axis, result.base_seed)?;
    write!(out, "designer,estimator,axis,value,nmse_db,mse,analytic_delta,analytic_nmse_db,signal_power,trials")?;
    if result.include_timing {
        write!(out, ",wall_time_s")?;
    }
    writeln!(out)?;
    for r in &result.rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.designer,
            r.estimator,
            result.axis,
            r.value,
            r.nmse_db,
            r.mse,
            opt_cell(r.analytic_delta),
            opt_cell(r.analytic_nmse_db()),
            r.signal_power,
            r.trials
        )?;
        if result.include_timing {
            write!(out, ",{}", r.wall_time_s)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
