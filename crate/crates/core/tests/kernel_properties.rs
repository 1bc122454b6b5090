//! Structural properties of the kernel constructors and the eigensolver.

mod common;

use icefill::channel::steering_vector;
use icefill::kernels::{
    bessel_kernel, evd_hermitian, exponential_kernel, statistical_kernel, Kernel, UpaGeometry, DEFAULT_RANK_TOL,
};
use icefill::linalg::{eigh_descending, frobenius, hermitian_defect};
use proptest::prelude::*;
use rand::Rng;

use common::{random_spectrum, rng, rotated_kernel};

fn factor_eigenvalues(kernel: &Kernel) -> Vec<f64> {
    eigh_descending(kernel.matrix()).0
}

fn assert_block_toeplitz(kernel: &Kernel, mx: usize, my: usize) {
    let s = kernel.matrix();
    let idx = |x: usize, y: usize| x * my + y;
    for x1 in 0..mx {
        for x2 in 0..mx {
            for y1 in 0..my {
                for y2 in 0..my {
                    let a = s[(idx(x1, y1), idx(x2, y2))];
                    if x1 + 1 < mx && x2 + 1 < mx {
                        assert!((a - s[(idx(x1 + 1, y1), idx(x2 + 1, y2))]).norm() < 1e-12);
                    }
                    if y1 + 1 < my && y2 + 1 < my {
                        assert!((a - s[(idx(x1, y1 + 1), idx(x2, y2 + 1))]).norm() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn exponential_and_bessel_are_block_toeplitz() {
    let geom = UpaGeometry::with_ratio(4, 3, 0.125).unwrap();
    assert_block_toeplitz(&exponential_kernel(&geom, 0.6).unwrap(), 4, 3);
    assert_block_toeplitz(&bessel_kernel(&geom, 0.85).unwrap(), 4, 3);
}

#[test]
fn kronecker_eigenvalues_are_pairwise_products() {
    for (mx, my) in [(2, 2), (4, 1), (1, 4)] {
        let geom = UpaGeometry::with_ratio(mx, my, 0.25).unwrap();
        let gx = UpaGeometry::with_ratio(mx, 1, 0.25).unwrap();
        let gy = UpaGeometry::with_ratio(my, 1, 0.25).unwrap();
        for (full, fx, fy) in [
            (exponential_kernel(&geom, 0.8).unwrap(), exponential_kernel(&gx, 0.8).unwrap(), exponential_kernel(&gy, 0.8).unwrap()),
            (bessel_kernel(&geom, 0.9).unwrap(), bessel_kernel(&gx, 0.9).unwrap(), bessel_kernel(&gy, 0.9).unwrap()),
        ] {
            let mut products: Vec<f64> = factor_eigenvalues(&fx)
                .iter()
                .flat_map(|a| factor_eigenvalues(&fy).into_iter().map(move |b| a * b))
                .collect();
            products.sort_by(|a, b| b.total_cmp(a));
            let got = factor_eigenvalues(&full);
            for (a, b) in got.iter().zip(&products) {
                assert!((a - b).abs() < 1e-10, "{got:?} vs {products:?}");
            }
        }
    }
}

#[test]
fn steering_vectors_have_norm_m() {
    let geom = UpaGeometry::with_ratio(5, 3, 0.3).unwrap();
    let mut r = rng(21);
    let half = std::f64::consts::FRAC_PI_2;
    for _ in 0..100 {
        let a = steering_vector(&geom, r.gen_range(-half..half), r.gen_range(-half..half));
        assert!((a.norm_squared() - 15.0).abs() < 1e-10);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn statistical_kernel_shifts_the_spectrum() {
    let mut r = rng(22);
    let kernel = rotated_kernel(&[3.0, 1.0, 0.5], 6, &mut r);
    let shifted = statistical_kernel(&kernel, 0.1).unwrap();
    let lams = factor_eigenvalues(&shifted);
    let want = [3.1, 1.1, 0.6, 0.1, 0.1, 0.1];
    for (a, b) in lams.iter().zip(want) {
        assert!((a - b).abs() < 1e-10, "{lams:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evd_round_trip(seed in 0u64..10_000, m in 2usize..12, k_frac in 0.1f64..1.0) {
        let mut r = rng(seed);
        let k = ((m as f64 * k_frac).ceil() as usize).clamp(1, m);
        let lams = random_spectrum(k, 0.05, 5.0, &mut r);
        let kernel = rotated_kernel(&lams, m, &mut r);
        let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(basis.rank(), k);
        prop_assert!(basis.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let err = frobenius(&(basis.reconstruct() - kernel.matrix()));
        prop_assert!(err <= 1e-8 * lams[0] * m as f64, "{}", err);
        let gram = basis.eigenvectors.adjoint() * &basis.eigenvectors;
        prop_assert!(hermitian_defect(&gram) < 1e-10);
        for i in 0..k {
            prop_assert!((gram[(i, i)].re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn evd_is_deterministic(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let lams = random_spectrum(4, 0.1, 3.0, &mut r);
        let kernel = rotated_kernel(&lams, 6, &mut r);
        let a = evd_hermitian(&kernel, DEFAULT_RANK_TOL).unwrap();
        let b = evd_hermitian(&kernel.clone(), DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(a, b);
    }
}
