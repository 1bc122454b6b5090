//! Builds the analytic UPA kernels and prints how their spectra concentrate
//! as the antenna spacing shrinks.
//!
//! ```bash
//! cargo run --release --example kernels_eigen [-- kernel.csv]
//! ```
//!
//! With a path, the 4×4 Bessel kernel at λ/8 is also written there in the
//! complex-matrix CSV format read by `icefill design` and `icefill estimate`.

use icefill::io::write_matrix;
use icefill::kernels::{bessel_kernel, evd_hermitian, exponential_kernel, Kernel, UpaGeometry, DEFAULT_RANK_TOL};

fn share_of_top(kernel: &Kernel, k: usize) -> f64 {
    let basis = evd_hermitian(kernel, DEFAULT_RANK_TOL).unwrap();
    let total: f64 = basis.eigenvalues.iter().sum();
    basis.eigenvalues.iter().take(k).sum::<f64>() / total
}

fn main() -> icefill::Result<()> {
    println!("{:>8} {:>14} {:>14}", "d/λ", "exp top-12 %", "bessel top-12 %");
    for d in [0.5, 0.25, 0.125, 0.0625] {
        let geom = UpaGeometry::with_ratio(8, 8, d)?;
        // η1 and η2 act as correlation decay per wavelength of separation.
        let exp = exponential_kernel(&geom, 0.9)?;
        let bes = bessel_kernel(&geom, 0.85)?;
        println!(
            "{d:>8.4} {:>14.2} {:>14.2}",
            100.0 * share_of_top(&exp, 12),
            100.0 * share_of_top(&bes, 12)
        );
    }

    let geom = UpaGeometry::with_ratio(8, 8, 0.125)?;
    let basis = evd_hermitian(&bessel_kernel(&geom, 0.85)?, DEFAULT_RANK_TOL)?;
    let head: Vec<String> = basis.eigenvalues.iter().take(8).map(|l| format!("{l:.3}")).collect();
    println!("\nbessel kernel at λ/8, rank {}: leading eigenvalues [{}]", basis.rank(), head.join(", "));

    if let Some(path) = std::env::args().nth(1) {
        let small = bessel_kernel(&UpaGeometry::with_ratio(4, 4, 0.125)?, 0.85)?;
        write_matrix(&path, small.matrix())?;
        println!("wrote 16x16 kernel to {path}");
    }
    Ok(())
}
