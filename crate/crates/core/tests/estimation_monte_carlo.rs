//! Monte-Carlo checks of the estimators against their closed forms.

mod common;

use icefill::analysis::{mse_mismatched, mse_random, posterior_trace};
use icefill::channel::{draw_gaussian_channel, receive_pilots, ChannelRealization};
use icefill::design::{dft_matrix, ice_fill, random_matrix, ObservationMatrix, RandomMode};
use icefill::estimate::{ls_estimate, LsEstimator, MmseEstimator};
use icefill::kernels::{bessel_kernel, evd_hermitian, exponential_kernel, Kernel, UpaGeometry, DEFAULT_RANK_TOL};
use icefill::linalg::{CompensatedSum, CVec};

use common::{random_unit_columns, rng};

const TRIALS: usize = 3000;

fn kernel16() -> Kernel {
    exponential_kernel(&UpaGeometry::with_ratio(4, 4, 0.25).unwrap(), 0.8).unwrap()
}

/// Mean `‖ĥ - h‖²` of MMSE run with `used` on channels drawn from `truth`.
fn empirical_mmse(w: &ObservationMatrix, used: &Kernel, truth: &Kernel, sigma2: f64, seed: u64) -> f64 {
    let basis = evd_hermitian(truth, DEFAULT_RANK_TOL).unwrap();
    let est = MmseEstimator::new(w, used, sigma2).unwrap();
    let mut r = rng(seed);
    let acc: CompensatedSum = (0..TRIALS)
        .map(|_| {
            let h = draw_gaussian_channel(&basis, &mut r);
            let y = receive_pilots(&h, w, sigma2, &mut r).unwrap();
            est.estimate(&y).unwrap().with_truth(&h.0).squared_error.unwrap()
        })
        .collect();
    acc.value() / TRIALS as f64
}

#[test]
fn mmse_error_matches_posterior_trace() {
    let kernel = kernel16();
    let mut r = rng(31);
    let w = ObservationMatrix::unit_norm(random_unit_columns(16, 8, &mut r)).unwrap();
    let sigma2 = 0.5;
    let mse = empirical_mmse(&w, &kernel, &kernel, sigma2, 32);
    let want = posterior_trace(&w, &kernel, sigma2).unwrap();
    assert!((mse / want - 1.0).abs() < 0.03, "{mse} vs {want}");
}

#[test]
fn ice_filled_mmse_matches_posterior_trace() {
    let kernel = kernel16();
    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
    let sigma2 = 0.2;
    let (w, _) = ice_fill(&basis, sigma2, 12).unwrap();
    let mse = empirical_mmse(&w, &kernel, &kernel, sigma2, 33);
    let want = posterior_trace(&w, &kernel, sigma2).unwrap();
    assert!((mse / want - 1.0).abs() < 0.03, "{mse} vs {want}");
}

#[test]
fn mmse_beats_ls_at_equal_observations() {
    let kernel = kernel16();
    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
    let sigma2 = kernel.trace();
    let w = dft_matrix(16).unwrap();
    let mmse = MmseEstimator::new(&w, &kernel, sigma2).unwrap();
    let ls = LsEstimator::new(&w).unwrap();
    let mut r = rng(34);
    let (mut e_mmse, mut e_ls) = (CompensatedSum::default(), CompensatedSum::default());
    for _ in 0..TRIALS {
        let h = draw_gaussian_channel(&basis, &mut r);
        let y = receive_pilots(&h, &w, sigma2, &mut r).unwrap();
        e_mmse.add((mmse.estimate(&y).unwrap().posterior_mean - &h.0).norm_squared());
        e_ls.add((ls.estimate(&y).unwrap() - &h.0).norm_squared());
    }
    assert!(e_mmse.value() < e_ls.value(), "{} vs {}", e_mmse.value(), e_ls.value());
}

#[test]
fn ls_passes_noise_through_a_unitary_dft() {
    let m = 16;
    let w = dft_matrix(m).unwrap();
    let sigma2 = 0.7;
    let zero = ChannelRealization(CVec::zeros(m));
    let mut r = rng(35);
    let draws = 10_000;
    let acc: CompensatedSum = (0..draws)
        .map(|_| {
            let y = receive_pilots(&zero, &w, sigma2, &mut r).unwrap();
            ls_estimate(&w, &y).unwrap().norm_squared()
        })
        .collect();
    let mean = acc.value() / draws as f64;
    assert!((mean / (m as f64 * sigma2) - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn mismatched_mmse_matches_closed_form() {
    let geom = UpaGeometry::with_ratio(4, 4, 0.25).unwrap();
    let truth = exponential_kernel(&geom, 0.8).unwrap();
    let used = bessel_kernel(&geom, 0.9).unwrap();
    let mut r = rng(36);
    let w = ObservationMatrix::unit_norm(random_unit_columns(16, 10, &mut r)).unwrap();
    let sigma2 = 0.3;
    let mse = empirical_mmse(&w, &used, &truth, sigma2, 37);
    let want = mse_mismatched(&w, &used, &truth, sigma2).unwrap();
    assert!((mse / want - 1.0).abs() < 0.03, "{mse} vs {want}");
}

#[test]
fn random_design_approaches_its_large_q_limit() {
    let kernel = kernel16();
    let lams = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap().eigenvalues;
    let (m, sigma2) = (16, 1.0);
    let mut r = rng(38);
    let draws = 200;
    let mut errors = Vec::new();
    for q in [64, 256, 512] {
        let acc: CompensatedSum = (0..draws)
            .map(|_| {
                let w = random_matrix(m, q, RandomMode::GaussianUnitNorm, &mut r).unwrap();
                posterior_trace(&w, &kernel, sigma2).unwrap()
            })
            .collect();
        let mean = acc.value() / draws as f64;
        let want = mse_random(&lams, q, m, sigma2).unwrap();
        // The posterior trace is convex in the Gram matrix, so finite Q sits above the limit.
        assert!(mean >= want * 0.99, "Q={q}: {mean} vs {want}");
        errors.push(mean / want - 1.0);
    }
    println!("relative excess over the limit: {errors:?}");
    assert!(errors.windows(2).all(|e| e[1] < e[0]), "{errors:?}");
    assert!(errors[2] < 0.05, "{errors:?}");
}
