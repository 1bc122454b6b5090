use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    mse_random, mse_statistical, pad, write_analytic_csv, AnalyticMethod, AnalyticRow,
};
use crate::channel::{draw_gaussian_channel, receive_pilots, seeded_rng, ChannelRealization};
use crate::design::{
    dft_matrix, ice_fill, ice_fill_spectrum, mm_design, random_matrix, top_q_matrix, water_fill, water_fill_matrix,
    Designer, MmOptions, ObservationMatrix, ObservationMode, PilotAllocation, PowerAllocation, RandomMode,
};
use crate::error::{Error, Result};
use crate::estimate::{ls_estimate, omp_estimate, MmseEstimator};
use crate::io::{format_matrix, parse_spectrum, read_matrix};
use crate::kernels::{evd_hermitian, Kernel, KernelLabel, DEFAULT_RANK_TOL};
use crate::linalg::CVec;

use super::{as_config, read_config_text, EstimatorChoice};

pub const ALLOCATION_CSV_VERSION: &str = "icefill-allocation/1";

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::config(e.to_string()))
}

fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    parse_toml(&read_config_text(path)?)
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn load_kernel(path: &Path) -> Result<Kernel> {
    Kernel::new(read_matrix(path)?, KernelLabel::Perfect).map_err(as_config)
}

/// `design` subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Kernel in complex-matrix CSV form.
    pub kernel: PathBuf,
    pub method: Designer,
    /// Pilot count; `dft` defaults to `M`.
    pub q: Option<usize>,
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Where the allocation table goes; defaults to `<output stem>_allocation.csv`.
    #[serde(default)]
    pub allocation_output: Option<PathBuf>,
    #[serde(default)]
    pub mm: MmOptions,
}

fn one() -> f64 {
    1.0
}

impl DesignConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: DesignConfig = load(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.kernel);
        for p in [&mut cfg.output, &mut cfg.allocation_output].into_iter().flatten() {
            rebase(base, p);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignAllocation {
    Water(PowerAllocation),
    Ice(PilotAllocation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutput {
    pub w: ObservationMatrix,
    pub allocation: Option<DesignAllocation>,
}

impl DesignOutput {
    /// Allocation table in long form, `field,index,value`, with 1-based
    /// eigen indices and timeslots.
    pub fn allocation_csv(&self) -> Option<String> {
        let alloc = self.allocation.as_ref()?;
        let mut s = format!("# {ALLOCATION_CSV_VERSION}\nfield,index,value\n");
        match alloc {
            DesignAllocation::Ice(a) => {
                for (k, n) in a.reuse.iter().enumerate() {
                    let _ = writeln!(s, "reuse,{},{n}", k + 1);
                }
                for (k, l) in a.ice_levels.iter().enumerate() {
                    let _ = writeln!(s, "ice_level,{},{l}", k + 1);
                }
                for (t, k) in a.order.iter().enumerate() {
                    let _ = writeln!(s, "order,{},{}", t + 1, k + 1);
                }
            }
            DesignAllocation::Water(p) => {
                for (k, v) in p.powers.iter().enumerate() {
                    let _ = writeln!(s, "power,{},{v}", k + 1);
                }
                let _ = writeln!(s, "water_level,,{}", p.water_level);
            }
        }
        Some(s)
    }

    /// Writes `W` to `w_path` and the allocation table, if any, next to it.
    pub fn write(&self, w_path: &Path, allocation_path: Option<&Path>) -> Result<Option<PathBuf>> {
        fs::write(w_path, format_matrix(self.w.matrix()))?;
        let Some(table) = self.allocation_csv() else { return Ok(None) };
        let path = match allocation_path {
            Some(p) => p.to_path_buf(),
            None => {
                let stem = w_path.file_stem().and_then(|s| s.to_str()).unwrap_or("design");
                w_path.with_file_name(format!("{stem}_allocation.csv"))
            }
        };
        fs::write(&path, table)?;
        Ok(Some(path))
    }
}

/// Loads the kernel and runs the named designer.
pub fn design_cmd(cfg: &DesignConfig) -> Result<DesignOutput> {
    let kernel = load_kernel(&cfg.kernel)?;
    let m = kernel.dim();
    let q = match (cfg.q, cfg.method) {
        (Some(q), _) => q,
        (None, Designer::Dft) => m,
        (None, d) => return Err(Error::config(format!("method {d} needs q"))),
    };
    if q == 0 {
        return Err(Error::config("q must be at least 1"));
    }
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::config("sigma2 must be positive"));
    }
    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut allocation = None;
    let w = match cfg.method {
        Designer::WaterFilling => {
            let alloc = water_fill(&basis.eigenvalues, cfg.sigma2, q as f64)?;
            let w = water_fill_matrix(&basis, &alloc, q)?;
            allocation = Some(DesignAllocation::Water(alloc));
            w
        }
        Designer::IceFilling => {
            let (w, alloc) = ice_fill(&basis, cfg.sigma2, q)?;
            allocation = Some(DesignAllocation::Ice(alloc));
            w
        }
        Designer::Mm => mm_design(&kernel, cfg.sigma2, q, &cfg.mm, &mut rng)?,
        Designer::RandomGaussian => random_matrix(m, q, RandomMode::GaussianUnitNorm, &mut rng)?,
        Designer::RandomPhase => random_matrix(m, q, RandomMode::PhaseOnly, &mut rng)?,
        Designer::TopQ => top_q_matrix(&basis, q).map_err(as_config)?,
        Designer::Dft => {
            if q > m {
                return Err(Error::config(format!("dft needs q <= M = {m}")));
            }
            let full = dft_matrix(m)?.into_matrix();
            ObservationMatrix::unit_norm(full.columns(0, q).into_owned())?
        }
    };
    Ok(DesignOutput { w, allocation })
}

/// `analyze` subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Real eigenvalues, separated by commas or whitespace.
    pub spectrum: PathBuf,
    pub methods: Vec<AnalyticMethod>,
    pub q: Vec<usize>,
    pub sigma2: f64,
    /// Kernel error variance; a positive value selects the
    /// statistical-kernel expressions.
    #[serde(default)]
    pub sigma_h2: f64,
    /// Antenna count; needed by `rnd` and by the statistical expressions.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl AnalyzeConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: AnalyzeConfig = load(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.spectrum);
        if let Some(p) = cfg.output.as_mut() {
            rebase(base, p);
        }
        Ok(cfg)
    }
}

/// Analytic MSE of every method over the Q grid.
pub fn analyze_cmd(cfg: &AnalyzeConfig) -> Result<Vec<AnalyticRow>> {
    let text = fs::read_to_string(&cfg.spectrum)?;
    let mut lams = parse_spectrum(&text, &cfg.spectrum.display().to_string())?;
    lams.sort_by(|a, b| b.total_cmp(a));
    analyze_spectrum(&lams, cfg)
}

fn analyze_spectrum(lams: &[f64], cfg: &AnalyzeConfig) -> Result<Vec<AnalyticRow>> {
    if cfg.methods.is_empty() || cfg.q.is_empty() {
        return Err(Error::config("methods and q must be non-empty"));
    }
    if cfg.q.contains(&0) {
        return Err(Error::config("q values must be at least 1"));
    }
    if !(cfg.sigma2 > 0.0) || !(cfg.sigma_h2 >= 0.0) {
        return Err(Error::config("sigma2 must be positive and sigma_h2 nonnegative"));
    }
    let statistical = cfg.sigma_h2 > 0.0;
    let needs_m = statistical || cfg.methods.contains(&AnalyticMethod::Rnd);
    let m = match cfg.m {
        Some(m) if m < lams.len() => return Err(Error::config("m is smaller than the spectrum length")),
        Some(m) => m,
        None if needs_m => return Err(Error::config("method rnd and sigma_h2 > 0 need the antenna count m")),
        None => lams.len(),
    };
    let live: Vec<f64> = lams.iter().cloned().filter(|&l| l > 0.0).collect();
    if live.is_empty() {
        return Err(Error::config("spectrum has no positive entries"));
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &q in &cfg.q {
            let delta = if statistical {
                mse_statistical(method, &pad(lams, m)?, cfg.sigma_h2, cfg.sigma2, q, m)?
            } else {
                match method {
                    AnalyticMethod::Wf => {
                        let p = water_fill(&live, cfg.sigma2, q as f64)?;
                        crate::analysis::mse_waterfilling(&live, &p, cfg.sigma2)?
                    }
                    AnalyticMethod::If => {
                        let (n, _) = ice_fill_spectrum(&live, cfg.sigma2, q)?;
                        crate::analysis::mse_icefilling(&live, &n, cfg.sigma2)?
                    }
                    AnalyticMethod::Rnd => mse_random(&live, q, m, cfg.sigma2)?,
                }
            };
            rows.push(AnalyticRow { method, q, snr_db: None, sigma_h2: cfg.sigma_h2, delta });
        }
    }
    Ok(rows)
}

pub fn analytic_csv(rows: &[AnalyticRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_analytic_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// `estimate` subcommand settings. Without `y` a channel is drawn from the
/// kernel with `seed` and observed through `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub w: PathBuf,
    pub kernel: PathBuf,
    pub sigma2: f64,
    #[serde(default = "mmse")]
    pub estimator: EstimatorChoice,
    #[serde(default)]
    pub y: Option<PathBuf>,
    /// True channel, for the squared error.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// OMP dictionary; defaults to the unitary DFT of size `M`.
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn mmse() -> EstimatorChoice {
    EstimatorChoice::Mmse
}

impl EstimateConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: EstimateConfig = load(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.w);
        rebase(base, &mut cfg.kernel);
        for p in [&mut cfg.y, &mut cfg.truth, &mut cfg.dictionary, &mut cfg.output].into_iter().flatten() {
            rebase(base, p);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutput {
    pub h_hat: CVec,
    /// Posterior covariance trace, for MMSE.
    pub posterior_trace: Option<f64>,
    pub squared_error: Option<f64>,
}

impl EstimateOutput {
    /// `ĥ` as an `M × 1` complex-matrix CSV, with the scalar results as
    /// leading comment lines.
    pub fn to_csv(&self, estimator: EstimatorChoice) -> String {
        let mut s = format!("# estimator={estimator}\n");
        if let Some(t) = self.posterior_trace {
            let _ = writeln!(s, "# posterior_trace={t}");
        }
        if let Some(e) = self.squared_error {
            let _ = writeln!(s, "# squared_error={e}");
        }
        s.push_str(&format_matrix(&crate::linalg::CMat::from_column_slice(
            self.h_hat.len(),
            1,
            self.h_hat.as_slice(),
        )));
        s
    }
}

fn read_vector(path: &Path) -> Result<CVec> {
    let m = read_matrix(path)?;
    if m.ncols() == 1 {
        Ok(m.column(0).into_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).transpose().into_owned())
    } else {
        Err(Error::config(format!("{} must hold a single row or column", path.display())))
    }
}

fn observation_from(matrix: crate::linalg::CMat) -> Result<ObservationMatrix> {
    ObservationMatrix::unit_norm(matrix.clone())
        .or_else(|_| ObservationMatrix::unit_modulus(matrix.clone()))
        .or_else(|_| ObservationMatrix::with_mode(matrix, ObservationMode::ScaledEigen))
}

pub fn estimate_cmd(cfg: &EstimateConfig) -> Result<EstimateOutput> {
    let kernel = load_kernel(&cfg.kernel)?;
    let w = observation_from(read_matrix(&cfg.w)?).map_err(as_config)?;
    if w.num_antennas() != kernel.dim() {
        return Err(Error::config("observation matrix and kernel sizes differ"));
    }
    if !(cfg.sigma2 >= 0.0) {
        return Err(Error::config("sigma2 must be nonnegative"));
    }
    let mut truth = cfg.truth.as_deref().map(read_vector).transpose()?;
    let y = match &cfg.y {
        Some(p) => read_vector(p)?,
        None => {
            let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
            let mut rng = seeded_rng(cfg.seed);
            let h = draw_gaussian_channel(&basis, &mut rng);
            let y = receive_pilots(&h, &w, cfg.sigma2, &mut rng)?;
            truth = Some(h.0);
            y
        }
    };
    if y.len() != w.num_pilots() {
        return Err(Error::config(format!("y has {} entries but W has {} columns", y.len(), w.num_pilots())));
    }
    let (h_hat, posterior_trace) = match cfg.estimator {
        EstimatorChoice::Mmse => {
            let est = MmseEstimator::new(&w, &kernel, cfg.sigma2)?;
            let r = est.estimate(&y)?;
            (r.posterior_mean, Some(r.posterior_trace))
        }
        EstimatorChoice::Ls => (ls_estimate(&w, &y).map_err(as_config)?, None),
        EstimatorChoice::Omp(s) => {
            let dict = match &cfg.dictionary {
                Some(p) => read_matrix(p)?,
                None => dft_matrix(kernel.dim())?.into_matrix(),
            };
            let s = s.unwrap_or_else(|| kernel_rank(&kernel).clamp(1, w.num_pilots()));
            (omp_estimate(&w, &dict, &y, s).map_err(as_config)?, None)
        }
    };
    if let Some(h) = &truth {
        if h.len() != h_hat.len() {
            return Err(Error::config("truth vector length differs from M"));
        }
    }
    let squared_error = truth.map(|h| ChannelRealization(h - &h_hat).power());
    Ok(EstimateOutput { h_hat, posterior_trace, squared_error })
}

fn kernel_rank(kernel: &Kernel) -> usize {
    evd_hermitian(kernel, DEFAULT_RANK_TOL).map(|b| b.rank()).unwrap_or(1)
}
