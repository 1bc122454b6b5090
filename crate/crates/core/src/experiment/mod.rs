//! Config-driven experiments and the commands behind the `icefill` binary.
//!
//! A sweep is described by an [`ExperimentConfig`] read from TOML:
//!
//! ```toml
//! trials = 3000
//! base_seed = 7
//! designers = ["if", "wf", "mm", "random-gaussian"]
//! estimators = ["mmse"]
//!
//! [geometry]
//! mx = 8
//! my = 8
//! d_over_lambda = 0.125
//!
//! [channel]
//! source = "gaussian"
//!
//! [kernel]
//! type = "perfect"
//!
//! [sweep]
//! axis = "snr-db"
//! values = [-10.0, -5.0, 0.0, 5.0, 10.0]
//! q = 64
//! ```
//!
//! Omitted sections take the defaults of their types. See [`run_sweep`] for
//! how a configuration turns into Monte-Carlo trials.

mod commands;
mod sweep;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ClusteredChannelParams, SnrReference};
use crate::design::{Designer, MmOptions};
use crate::error::{Error, Result};
use crate::kernels::UpaGeometry;

pub use commands::{
    analytic_csv, analyze_cmd, design_cmd, estimate_cmd, AnalyzeConfig, DesignAllocation, DesignConfig,
    DesignOutput, EstimateConfig, EstimateOutput, ALLOCATION_CSV_VERSION,
};
pub use sweep::{run_sweep, write_sweep_csv, SweepResult, SweepRow, SWEEP_CSV_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub mx: usize,
    pub my: usize,
    /// Antenna spacing in wavelengths.
    pub d_over_lambda: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { mx: 8, my: 8, d_over_lambda: 0.125 }
    }
}

impl GeometryConfig {
    pub fn geometry(&self) -> Result<UpaGeometry> {
        UpaGeometry::with_ratio(self.mx, self.my, self.d_over_lambda).map_err(as_config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelSource {
    /// `h ~ CN(0, Σ_h)` drawn from the true kernel.
    #[default]
    Gaussian,
    /// Clustered multipath draws.
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub source: ChannelSource,
    /// True kernel for Gaussian draws. Without it the clustered-model sample
    /// covariance is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
    pub clustered: ClusteredChannelParams,
    /// Clustered draws behind the sample-covariance ("perfect") kernel.
    pub covariance_draws: usize,
    /// Clustered draws behind the empirical `E‖h‖²`.
    pub power_draws: usize,
    pub snr_reference: SnrReference,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            source: ChannelSource::Gaussian,
            kernel_file: None,
            clustered: ClusteredChannelParams::default(),
            covariance_draws: 100_000,
            power_draws: 10_000,
            snr_reference: SnrReference::Total,
        }
    }
}

/// Prior kernel handed to the designers and the MMSE estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelChoice {
    /// The true kernel.
    #[default]
    Perfect,
    /// `Σ_h + σ_h² I`, with `σ_h²` given in dB relative to the mean
    /// eigenvalue `Tr(Σ_h)/M`.
    Statistical { sigma_h2_db: f64 },
    Exponential { eta1: f64 },
    Bessel { eta2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    #[default]
    SnrDb,
    Q,
    /// Antenna spacing in wavelengths.
    Spacing,
    /// Kernel error `σ_h²` in dB relative to the mean eigenvalue.
    SigmaH2,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr-db",
            SweepAxis::Q => "q",
            SweepAxis::Spacing => "spacing",
            SweepAxis::SigmaH2 => "sigma-h2",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The swept quantity and the fixed values of the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub snr_db: f64,
    pub q: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { axis: SweepAxis::SnrDb, values: vec![0.0], snr_db: 0.0, q: 64 }
    }
}

/// Channel estimator applied to every designed observation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorChoice {
    Mmse,
    /// Least squares; needs a square invertible `W`.
    Ls,
    /// OMP over the 2-D DFT dictionary; `None` picks the sparsity from the
    /// kernel rank.
    Omp(Option<usize>),
}

impl fmt::Display for EstimatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorChoice::Mmse => f.write_str("mmse"),
            EstimatorChoice::Ls => f.write_str("ls"),
            EstimatorChoice::Omp(None) => f.write_str("omp"),
            EstimatorChoice::Omp(Some(s)) => write!(f, "omp:{s}"),
        }
    }
}

impl FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmse" => Ok(EstimatorChoice::Mmse),
            "ls" => Ok(EstimatorChoice::Ls),
            "omp" => Ok(EstimatorChoice::Omp(None)),
            other => match other.strip_prefix("omp:").map(str::parse::<usize>) {
                Some(Ok(s)) if s > 0 => Ok(EstimatorChoice::Omp(Some(s))),
                _ => Err(Error::config(format!("unknown estimator {other:?} (mmse, ls, omp or omp:<S>)"))),
            },
        }
    }
}

impl TryFrom<String> for EstimatorChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorChoice> for String {
    fn from(e: EstimatorChoice) -> String {
        e.to_string()
    }
}

/// Full description of a Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    /// Trial `t` draws from the stream seeded with `base_seed + t`.
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub designers: Vec<Designer>,
    pub estimators: Vec<EstimatorChoice>,
    /// Adds a wall-time column; the CSV is then no longer byte-reproducible.
    pub include_timing: bool,
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    pub kernel: KernelChoice,
    pub sweep: SweepConfig,
    pub mm: MmOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 3000,
            base_seed: 0,
            output: None,
            designers: vec![Designer::IceFilling],
            estimators: vec![EstimatorChoice::Mmse],
            include_timing: false,
            geometry: GeometryConfig::default(),
            channel: ChannelConfig::default(),
            kernel: KernelChoice::Perfect,
            sweep: SweepConfig::default(),
            mm: MmOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads and validates a config file; relative paths inside it are
    /// resolved against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&read_config_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.output = cfg.output.map(|p| base.join(p));
        cfg.channel.kernel_file = cfg.channel.kernel_file.map(|p| base.join(p));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.designers.is_empty() || self.estimators.is_empty() {
            return Err(Error::config("designers and estimators must be non-empty"));
        }
        if has_duplicates(&self.designers) || has_duplicates(&self.estimators) {
            return Err(Error::config("designers and estimators must not repeat"));
        }
        if self.estimators.contains(&EstimatorChoice::Ls) && self.designers.iter().any(|&d| d != Designer::Dft) {
            return Err(Error::config("estimator ls needs a square invertible W; pair it only with designer dft"));
        }
        self.geometry.geometry()?;
        self.channel.clustered.validate().map_err(as_config)?;
        if self.channel.covariance_draws == 0 || self.channel.power_draws == 0 {
            return Err(Error::config("draw counts must be at least 1"));
        }
        if self.mm.max_iter == 0 || !(self.mm.rel_tol >= 0.0) {
            return Err(Error::config("mm.max_iter must be positive and mm.rel_tol nonnegative"));
        }
        match self.kernel {
            KernelChoice::Exponential { eta1: e } | KernelChoice::Bessel { eta2: e } if !(e > 0.0) => {
                return Err(Error::config("kernel shape parameter must be positive"));
            }
            KernelChoice::Statistical { sigma_h2_db } if !sigma_h2_db.is_finite() => {
                return Err(Error::config("sigma_h2_db must be finite"));
            }
            _ => {}
        }
        let sweep = &self.sweep;
        if sweep.values.is_empty() {
            return Err(Error::config("sweep.values must be non-empty"));
        }
        if sweep.values.iter().any(|v| !v.is_finite()) || sweep.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep.values must be finite and strictly increasing"));
        }
        if !sweep.snr_db.is_finite() {
            return Err(Error::config("sweep.snr_db must be finite"));
        }
        if sweep.q == 0 {
            return Err(Error::config("sweep.q must be at least 1"));
        }
        match sweep.axis {
            SweepAxis::Q if sweep.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) => {
                Err(Error::config("Q values must be positive integers"))
            }
            SweepAxis::Spacing if sweep.values.iter().any(|&v| v <= 0.0) => {
                Err(Error::config("spacing values must be positive"))
            }
            SweepAxis::Spacing if self.channel.kernel_file.is_some() => {
                Err(Error::config("a spacing sweep cannot use a fixed kernel_file"))
            }
            SweepAxis::SigmaH2 if !matches!(self.kernel, KernelChoice::Statistical { .. }) => {
                Err(Error::config("a sigma-h2 sweep needs kernel.type = \"statistical\""))
            }
            _ => Ok(()),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

pub(crate) fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::Config(msg),
        other => other,
    }
}

pub(crate) fn read_config_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn parses_full_config() {
        let text = r#"
            trials = 10
            base_seed = 3
            designers = ["if", "wf", "mm", "random-gaussian"]
            estimators = ["mmse", "omp:8"]
            [geometry]
            mx = 4
            my = 2
            [channel]
            source = "clustered"
            snr_reference = "per-antenna"
            [channel.clustered]
            num_clusters = 5
            [kernel]
            type = "statistical"
            sigma_h2_db = -15.0
            [sweep]
            axis = "q"
            values = [4.0, 8.0]
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.designers[1], Designer::WaterFilling);
        assert_eq!(cfg.estimators[1], EstimatorChoice::Omp(Some(8)));
        assert_eq!(cfg.channel.clustered.num_clusters, 5);
        assert_eq!(cfg.channel.snr_reference, SnrReference::PerAntenna);
        assert_eq!(cfg.channel.clustered.rays_per_cluster, 20);
        assert_eq!(cfg.kernel, KernelChoice::Statistical { sigma_h2_db: -15.0 });
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "trials = 0",
            "designers = []",
            "estimators = [\"vamp\"]",
            "estimators = [\"ls\"]\ndesigners = [\"if\"]",
            "[sweep]\nvalues = []",
            "[sweep]\nvalues = [1.0, 0.0]",
            "[sweep]\naxis = \"q\"\nvalues = [2.5]",
            "[sweep]\naxis = \"sigma-h2\"\nvalues = [-10.0]",
            "[kernel]\ntype = \"bessel\"\neta2 = -1.0",
            "[geometry]\nmx = 0",
            "unknown_key = 1",
        ];
        for text in bad {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
        assert!(ExperimentConfig::from_toml_str("estimators = [\"ls\"]\ndesigners = [\"dft\"]").is_ok());
    }

    #[test]
    fn estimator_names() {
        for e in [EstimatorChoice::Mmse, EstimatorChoice::Ls, EstimatorChoice::Omp(None), EstimatorChoice::Omp(Some(3))] {
            assert_eq!(e.to_string().parse::<EstimatorChoice>().unwrap(), e);
        }
        assert!("omp:0".parse::<EstimatorChoice>().is_err());
    }
}
