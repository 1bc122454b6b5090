//! One pass through the estimation pipeline: design pilots, receive them and
//! recover the channel with MMSE, LS and OMP.
//!
//! ```bash
//! cargo run --release --example mmse_estimation
//! ```

use icefill::channel::{draw_gaussian_channel, receive_pilots, seeded_rng};
use icefill::design::{dft_matrix, ice_fill};
use icefill::estimate::{ls_estimate, omp_estimate, MmseEstimator};
use icefill::kernels::{evd_hermitian, exponential_kernel, UpaGeometry, DEFAULT_RANK_TOL};

fn main() -> icefill::Result<()> {
    let geom = UpaGeometry::with_ratio(4, 4, 0.125)?;
    let kernel = exponential_kernel(&geom, 0.9)?;
    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
    let sigma2 = 0.1;
    let trials = 2000;
    let mut rng = seeded_rng(11);

    let (w_if, _) = ice_fill(&basis, sigma2, 6)?;
    let mmse = MmseEstimator::new(&w_if, &kernel, sigma2)?;
    let dft = dft_matrix(16)?;
    let mmse_dft = MmseEstimator::new(&dft, &kernel, sigma2)?;

    let (mut e_if, mut e_dft, mut e_ls, mut e_omp, mut power) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..trials {
        let h = draw_gaussian_channel(&basis, &mut rng);
        power += h.power();
        let y = receive_pilots(&h, &w_if, sigma2, &mut rng)?;
        e_if += (mmse.estimate(&y)?.posterior_mean - &h.0).norm_squared();

        let y = receive_pilots(&h, &dft, sigma2, &mut rng)?;
        e_dft += (mmse_dft.estimate(&y)?.posterior_mean - &h.0).norm_squared();
        e_ls += (ls_estimate(&dft, &y)? - &h.0).norm_squared();
        e_omp += (omp_estimate(&dft, dft.matrix(), &y, 4)? - &h.0).norm_squared();
    }
    let nmse = |e: f64| 10.0 * (e / power).log10();
    println!("MMSE, ice-filling, Q = 6   {:>7.2} dB (closed form {:.2} dB)", nmse(e_if), 10.0 * (mmse.posterior_trace() / kernel.trace()).log10());
    println!("MMSE, DFT, Q = 16          {:>7.2} dB", nmse(e_dft));
    println!("LS,   DFT, Q = 16          {:>7.2} dB", nmse(e_ls));
    println!("OMP,  DFT, Q = 16, S = 4   {:>7.2} dB", nmse(e_omp));
    Ok(())
}
