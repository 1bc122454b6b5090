//! Draws clustered multipath channels, estimates their covariance and
//! compares it with Gaussian draws from that covariance.
//!
//! ```bash
//! cargo run --release --example channel_draws
//! ```

use icefill::channel::{draw_clustered_channel, draw_gaussian_channel, seeded_rng, ClusteredChannelParams};
use icefill::kernels::{evd_hermitian, CovarianceAccumulator, UpaGeometry, DEFAULT_RANK_TOL};
use icefill::linalg::frobenius;

fn main() -> icefill::Result<()> {
    let geom = UpaGeometry::with_ratio(8, 8, 0.125)?;
    let params = ClusteredChannelParams::default();
    let mut rng = seeded_rng(7);

    let draws = 20_000;
    let mut acc = CovarianceAccumulator::new(geom.num_antennas());
    let mut power = 0.0;
    for _ in 0..draws {
        let h = draw_clustered_channel(&geom, &params, &mut rng);
        power += h.power();
        acc.push(h.as_vec());
    }
    let kernel = acc.finish()?;
    println!("clustered: E‖h‖²/M = {:.3} over {draws} draws", power / draws as f64 / 64.0);

    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
    let total: f64 = basis.eigenvalues.iter().sum();
    for k in [4, 8, 12, 16] {
        let share: f64 = basis.eigenvalues.iter().take(k).sum::<f64>() / total;
        println!("  top-{k:<2} eigenvalues hold {:.2}% of the trace", 100.0 * share);
    }

    // Gaussian surrogate: same second-order statistics, no multipath structure.
    let mut gauss = CovarianceAccumulator::new(64);
    for _ in 0..draws {
        gauss.push(draw_gaussian_channel(&basis, &mut rng).as_vec());
    }
    let resampled = gauss.finish()?;
    let err = frobenius(&(resampled.matrix() - kernel.matrix())) / frobenius(kernel.matrix());
    println!("gaussian redraw: relative Frobenius error {:.3}", err);
    Ok(())
}
