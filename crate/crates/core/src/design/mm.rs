//! Majorization-minimization design for phase-only combiners.
//!
//! For each timeslot `t` the unit-modulus problem
//! `max_{|w_m| = 1/√M} w^H Σ_t w` is attacked by replacing
//! `w^H (λ_max I - Σ_t) w` with the quadratic upper bound whose curvature is
//! `X = Tr(λ_max I - Σ_t) I`. Minimizing the bound at the current point `v`
//! has the closed form `w = exp(j∠((X - λ_max I + Σ_t) v)) / √M`, and each
//! step never decreases `w^H Σ_t w`.
//!
//! The trace curvature is loose, so convergence can take thousands of
//! iterations at M = 64. [`Curvature::Spectral`] swaps in the tight bound
//! `λ_max(λ_max I - Σ_t) = λ_max - λ_min`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{info, ObservationMatrix};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{self, real, CMat, CVec, C64};

/// Scale of the isotropic majorizer `X = x I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    /// `x = Tr(λ_max I - Σ_t)`.
    #[default]
    Trace,
    /// `x = λ_max - λ_min`.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmOptions {
    pub max_iter: usize,
    /// Stop once the relative change of `w^H Σ_t w` falls below this.
    pub rel_tol: f64,
    pub curvature: Curvature,
}

impl Default for MmOptions {
    fn default() -> Self {
        MmOptions { max_iter: 10_000, rel_tol: 1e-8, curvature: Curvature::Trace }
    }
}

/// Per-timeslot diagnostics of [`mm_design_traced`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MmTrace {
    /// Objective `w^H Σ_t w` at the random start and after every iteration.
    pub objectives: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
}

impl MmTrace {
    pub fn iterations(&self, t: usize) -> usize {
        self.objectives[t].len() - 1
    }
}

pub fn mm_design<R: Rng + ?Sized>(
    kernel: &Kernel,
    sigma2: f64,
    q: usize,
    opts: &MmOptions,
    rng: &mut R,
) -> Result<ObservationMatrix> {
    mm_design_traced(kernel, sigma2, q, opts, rng).map(|(w, _)| w)
}

pub fn mm_design_traced<R: Rng + ?Sized>(
    kernel: &Kernel,
    sigma2: f64,
    q: usize,
    opts: &MmOptions,
    rng: &mut R,
) -> Result<(ObservationMatrix, MmTrace)> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if q == 0 {
        return Err(Error::invalid("pilot count must be at least 1"));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    let m = kernel.dim();
    let amp = 1.0 / (m as f64).sqrt();
    let mut sigma_t = kernel.matrix().clone();
    let mut w_all = CMat::zeros(m, q);
    let mut trace = MmTrace::default();

    for t in 0..q {
        let (lam_min, lam_max) = linalg::eigen_range(&sigma_t);
        let lam_max = lam_max.max(0.0);
        let x = match opts.curvature {
            Curvature::Trace => m as f64 * lam_max - linalg::trace_re(&sigma_t),
            Curvature::Spectral => lam_max - lam_min.max(0.0),
        };
        let shift = real(x - lam_max);

        let mut w = CVec::from_fn(m, |_, _| C64::from_polar(amp, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)));
        let mut f = linalg::quad_form(&sigma_t, &w);
        let mut objectives = vec![f];
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let z = &sigma_t * &w + &w * shift;
            w = z.map(|zi| C64::from_polar(amp, zi.arg()));
            let f_new = linalg::quad_form(&sigma_t, &w);
            objectives.push(f_new);
            let change = (f_new - f).abs();
            f = f_new;
            if change <= opts.rel_tol * f.abs() || f == 0.0 {
                converged = true;
                break;
            }
        }
        trace.objectives.push(objectives);
        trace.converged.push(converged);
        w_all.set_column(t, &w);
        sigma_t = info::downdate(&sigma_t, &w, sigma2)?;
    }
    Ok((ObservationMatrix::unit_modulus(w_all)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::seeded_rng;
    use crate::kernels::KernelLabel;

    #[test]
    fn isotropic_kernel_converges_immediately() {
        let k = Kernel::new(CMat::identity(4, 4) * real(2.5), KernelLabel::Perfect).unwrap();
        let (w, trace) = mm_design_traced(&k, 1.0, 1, &MmOptions::default(), &mut seeded_rng(1)).unwrap();
        assert_eq!(trace.iterations(0), 1);
        assert!(trace.converged[0]);
        assert!((trace.objectives[0][1] - 2.5).abs() < 1e-12);
        assert_eq!(w.num_pilots(), 1);
    }

    #[test]
    fn rank_one_constant_modulus_optimum() {
        let ones = CMat::from_element(2, 2, real(1.0));
        let k = Kernel::new(ones, KernelLabel::Perfect).unwrap();
        let (_, trace) = mm_design_traced(&k, 1.0, 1, &MmOptions::default(), &mut seeded_rng(2)).unwrap();
        let last = *trace.objectives[0].last().unwrap();
        assert!((last - 2.0).abs() < 1e-6, "{last}");
    }

    #[test]
    fn diagonal_kernel_is_phase_invariant() {
        let k = Kernel::from_real_diagonal(&[2.0, 1.0]);
        let (_, trace) = mm_design_traced(&k, 1.0, 1, &MmOptions::default(), &mut seeded_rng(3)).unwrap();
        assert!(trace.objectives[0].iter().all(|f| (f - 1.5).abs() < 1e-14));
    }

    #[test]
    fn spectral_curvature_reaches_the_same_optimum_faster() {
        let ones = CMat::from_element(3, 3, real(1.0)) + CMat::identity(3, 3) * real(0.2);
        let k = Kernel::new(ones, KernelLabel::Perfect).unwrap();
        let run = |curvature| {
            let opts = MmOptions { curvature, ..MmOptions::default() };
            mm_design_traced(&k, 1.0, 1, &opts, &mut seeded_rng(5)).unwrap().1
        };
        let (trace, spectral) = (run(Curvature::Trace), run(Curvature::Spectral));
        let best = |t: &MmTrace| *t.objectives[0].last().unwrap();
        assert!((best(&trace) - best(&spectral)).abs() < 1e-6);
        assert!(spectral.iterations(0) < trace.iterations(0));
    }

    #[test]
    fn output_is_unit_modulus_and_deterministic() {
        let k = Kernel::from_real_diagonal(&[3.0, 1.0, 0.5, 0.1]);
        let a = mm_design(&k, 0.5, 6, &MmOptions::default(), &mut seeded_rng(4)).unwrap();
        let b = mm_design(&k, 0.5, 6, &MmOptions::default(), &mut seeded_rng(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.matrix().iter().all(|z| (z.norm() - 0.5).abs() < 1e-12));
    }
}
