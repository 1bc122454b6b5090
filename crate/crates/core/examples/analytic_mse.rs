//! Closed-form MSEs: perfect and statistical kernels, and the slopes of
//! their decay in Q.
//!
//! ```bash
//! cargo run --release --example analytic_mse
//! ```

use icefill::analysis::{asymptotic_mse, mse_statistical, pad, AnalyticMethod, AsymptoticParams, Regime};

fn main() -> icefill::Result<()> {
    let spectrum = vec![20.0, 12.0, 8.0, 5.0, 3.0, 2.0, 1.0, 0.5];
    let m = 64;
    let sigma2 = 1.0;
    let methods = [AnalyticMethod::Wf, AnalyticMethod::If, AnalyticMethod::Rnd];

    let padded = pad(&spectrum, m)?;
    println!("{:>10} {:>10} {:>10} {:>10}", "σ_h²", "wf", "if", "rnd");
    for sigma_h2 in [0.0, 0.01, 0.1, 1.0] {
        let row: Vec<String> = methods
            .iter()
            .map(|&method| mse_statistical(method, &padded, sigma_h2, sigma2, 32, m).map(|d| format!("{d:>10.4}")))
            .collect::<icefill::Result<_>>()?;
        println!("{sigma_h2:>10} {}", row.join(" "));
    }

    // A finite kernel error gives every spurious direction a little prior
    // mass, and once Q is large enough they draw pilots, so the decay stalls.
    let params = AsymptoticParams { spectrum, sigma2, m, q_grid: vec![128, 256, 512, 1024, 2048] };
    println!();
    for (name, regime) in [
        ("perfect", Regime::Perfect),
        ("statistical σ_h² = 0.1", Regime::Statistical { sigma_h2: 0.1 }),
        ("statistical σ_h² → ∞", Regime::StatisticalInfiniteError),
    ] {
        for &method in &methods {
            let fit = asymptotic_mse(method, regime, &params)?;
            println!("{name:<24} {:<4} slope {:+.3}", method.as_str(), fit.slope);
        }
    }
    Ok(())
}
