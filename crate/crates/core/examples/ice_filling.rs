//! Ice-filling versus water-filling on a small spectrum: pilot reuse,
//! ice levels and the resulting MSE gap as Q grows.
//!
//! ```bash
//! cargo run --release --example ice_filling
//! ```

use icefill::analysis::{mse_gap_bound, mse_icefilling, mse_waterfilling, verify_quantization};
use icefill::design::{ice_fill_spectrum, water_fill};

fn main() -> icefill::Result<()> {
    let lams = [3.1, 1.7, 0.9, 0.35];
    let sigma2 = 1.0;

    let (alloc, trace) = ice_fill_spectrum(&lams, sigma2, 8)?;
    let power = water_fill(&lams, sigma2, 8.0)?;
    println!("Q = 8");
    println!("  selection order   {:?}", alloc.order.iter().map(|k| k + 1).collect::<Vec<_>>());
    println!("  reuse n_k         {:?}", alloc.reuse);
    println!("  water-filling p_k {:?}", power.powers.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    println!("  water level β     {:.4}", power.water_level);
    println!("  ice levels        {:?}", alloc.ice_levels.iter().map(|l| format!("{l:.3}")).collect::<Vec<_>>());
    println!("  max |n_k - p_k|   {:.4}", verify_quantization(&alloc, &power)?);
    let last = trace.working.last().unwrap();
    println!("  working λ after Q {:?}", last.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>());

    println!("\n{:>6} {:>12} {:>12} {:>12} {:>12}", "Q", "δ_wf", "δ_if", "gap", "bound");
    for q in [8usize, 16, 32, 64, 128, 256] {
        let p = water_fill(&lams, sigma2, q as f64)?;
        let (n, _) = ice_fill_spectrum(&lams, sigma2, q)?;
        let wf = mse_waterfilling(&lams, &p, sigma2)?;
        let ice = mse_icefilling(&lams, &n, sigma2)?;
        let bound = mse_gap_bound(&lams, &p, sigma2).map(|b| format!("{b:.3e}")).unwrap_or_else(|_| "n/a".into());
        println!("{q:>6} {wf:>12.6} {ice:>12.6} {:>12.3e} {bound:>12}", ice - wf);
    }
    Ok(())
}
