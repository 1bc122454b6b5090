//! Phase-only pilot design by majorization-minimization, compared with
//! ice-filling and random phases on a dense-array kernel.
//!
//! ```bash
//! cargo run --release --example mm_design
//! ```

use icefill::analysis::posterior_trace;
use icefill::design::{
    ice_fill, mm_design_traced, mutual_information, random_matrix, Curvature, MmOptions, RandomMode,
};
use icefill::channel::seeded_rng;
use icefill::kernels::{bessel_kernel, evd_hermitian, UpaGeometry, DEFAULT_RANK_TOL};

fn main() -> icefill::Result<()> {
    let geom = UpaGeometry::with_ratio(4, 4, 0.125)?;
    let kernel = bessel_kernel(&geom, 0.85)?;
    let basis = evd_hermitian(&kernel, DEFAULT_RANK_TOL)?;
    let (sigma2, q) = (0.1, 8);
    let mut rng = seeded_rng(3);

    for curvature in [Curvature::Trace, Curvature::Spectral] {
        let opts = MmOptions { curvature, ..MmOptions::default() };
        let (w, trace) = mm_design_traced(&kernel, sigma2, q, &opts, &mut rng)?;
        let iters: Vec<usize> = (0..q).map(|t| trace.iterations(t)).collect();
        println!("mm ({curvature:?} curvature): iterations per timeslot {iters:?}");
        println!(
            "  first slot objective {:.4} -> {:.4}",
            trace.objectives[0][0],
            trace.objectives[0].last().unwrap()
        );
        println!(
            "  MI {:.4} nats, MSE {:.4}",
            mutual_information(&w, &kernel, sigma2)?,
            posterior_trace(&w, &kernel, sigma2)?
        );
    }

    let (w_if, _) = ice_fill(&basis, sigma2, q)?;
    let w_rnd = random_matrix(16, q, RandomMode::PhaseOnly, &mut rng)?;
    for (name, w) in [("ice-filling", &w_if), ("random phase", &w_rnd)] {
        println!(
            "{name}: MI {:.4} nats, MSE {:.4}",
            mutual_information(w, &kernel, sigma2)?,
            posterior_trace(w, &kernel, sigma2)?
        );
    }
    println!("prior trace {:.4}", kernel.trace());
    Ok(())
}
