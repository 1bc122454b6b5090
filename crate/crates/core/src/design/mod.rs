//! Observation-matrix designers.
//!
//! Every designer returns an [`ObservationMatrix`] whose columns are the
//! per-pilot combining vectors `w_q`. The mutual-information and
//! posterior-kernel recursions the greedy designers rely on live in
//! [`info`].

mod baseline;
mod icefill;
pub mod info;
mod mm;
mod waterfill;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;

pub use baseline::{dft_matrix, random_matrix, top_q_matrix, RandomMode};
pub use icefill::{ice_fill, ice_fill_spectrum, ice_fill_traced, IceFillTrace, PilotAllocation};
pub use info::{mi_increment, mutual_information, posterior_kernel_update};
pub use mm::{mm_design, mm_design_traced, Curvature, MmOptions, MmTrace};
pub use waterfill::{water_fill, water_fill_matrix, PowerAllocation};

const NORM_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    /// `‖w_q‖₂ = 1` for every column.
    UnitNormColumns,
    /// `|w_{q,m}| = 1/√M` for every entry.
    UnitModulusEntries,
    /// Water-filling relaxation: `‖W‖_F² = Q`.
    ScaledEigen,
}

/// `M × Q` pilot observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    matrix: CMat,
    mode: ObservationMode,
    eigen_indices: Option<Vec<usize>>,
}

impl ObservationMatrix {
    /// Wraps a matrix whose columns must have unit norm.
    pub fn unit_norm(matrix: CMat) -> Result<Self> {
        for (q, col) in matrix.column_iter().enumerate() {
            let n = col.norm();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(format!("column {q} has norm {n}, expected 1")));
            }
        }
        Ok(ObservationMatrix { matrix, mode: ObservationMode::UnitNormColumns, eigen_indices: None })
    }

    /// Wraps a matrix whose entries must all have modulus `1/√M`.
    pub fn unit_modulus(matrix: CMat) -> Result<Self> {
        let target = 1.0 / (matrix.nrows() as f64).sqrt();
        if let Some(z) = matrix.iter().find(|z| (z.norm() - target).abs() > NORM_TOL) {
            return Err(Error::invalid(format!("entry modulus {} differs from 1/sqrt(M)", z.norm())));
        }
        Ok(ObservationMatrix { matrix, mode: ObservationMode::UnitModulusEntries, eigen_indices: None })
    }

    /// Wraps a water-filling matrix with total power `budget`.
    pub fn scaled_eigen(matrix: CMat, budget: f64) -> Result<Self> {
        let power: f64 = matrix.iter().map(|z| z.norm_sqr()).sum();
        if (power - budget).abs() > POWER_TOL * budget.max(1.0) {
            return Err(Error::invalid(format!("total power {power} differs from budget {budget}")));
        }
        Ok(ObservationMatrix { matrix, mode: ObservationMode::ScaledEigen, eigen_indices: None })
    }

    /// Wraps a matrix with a declared mode after validating it.
    pub fn with_mode(matrix: CMat, mode: ObservationMode) -> Result<Self> {
        match mode {
            ObservationMode::UnitNormColumns => Self::unit_norm(matrix),
            ObservationMode::UnitModulusEntries => Self::unit_modulus(matrix),
            ObservationMode::ScaledEigen => {
                let power: f64 = matrix.iter().map(|z| z.norm_sqr()).sum();
                Self::scaled_eigen(matrix, power)
            }
        }
    }

    pub(crate) fn with_indices(mut self, indices: Vec<usize>) -> Self {
        self.eigen_indices = Some(indices);
        self
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn mode(&self) -> ObservationMode {
        self.mode
    }

    /// Eigen index (0-based) chosen for each column, for eigenvector designers.
    pub fn eigen_indices(&self) -> Option<&[usize]> {
        self.eigen_indices.as_deref()
    }

    pub fn num_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_pilots(&self) -> usize {
        self.matrix.ncols()
    }

    /// `W W^H`.
    pub fn gram(&self) -> CMat {
        &self.matrix * self.matrix.adjoint()
    }
}

/// Named observation-matrix designers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Designer {
    #[serde(alias = "wf")]
    WaterFilling,
    #[serde(alias = "if")]
    IceFilling,
    #[serde(alias = "mm")]
    Mm,
    RandomGaussian,
    RandomPhase,
    #[serde(alias = "topq")]
    TopQ,
    Dft,
}

impl Designer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Designer::WaterFilling => "wf",
            Designer::IceFilling => "if",
            Designer::Mm => "mm",
            Designer::RandomGaussian => "random-gaussian",
            Designer::RandomPhase => "random-phase",
            Designer::TopQ => "topq",
            Designer::Dft => "dft",
        }
    }
}

impl fmt::Display for Designer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Designer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wf" | "water-filling" => Designer::WaterFilling,
            "if" | "ice-filling" => Designer::IceFilling,
            "mm" => Designer::Mm,
            "random-gaussian" | "random" => Designer::RandomGaussian,
            "random-phase" => Designer::RandomPhase,
            "topq" | "top-q" => Designer::TopQ,
            "dft" => Designer::Dft,
            other => return Err(Error::config(format!("unknown design method {other:?}"))),
        })
    }
}
