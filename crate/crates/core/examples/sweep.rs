//! Runs a Monte-Carlo SNR sweep from a TOML file and prints the CSV.
//!
//! ```bash
//! cargo run --release --example sweep -- configs/sweep_snr.toml
//! ```
//!
//! Without an argument a small built-in configuration is used.

use icefill::experiment::{run_sweep, write_sweep_csv, ExperimentConfig};

const SMALL: &str = r#"
trials = 300
designers = ["if", "wf", "random-gaussian", "topq"]
estimators = ["mmse"]

[geometry]
mx = 4
my = 4
d_over_lambda = 0.125

[channel]
source = "clustered"
covariance_draws = 20000
power_draws = 2000

[sweep]
axis = "snr-db"
values = [-10.0, 0.0, 10.0]
q = 8
"#;

fn main() -> icefill::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::from_toml_str(SMALL)?,
    };
    let result = run_sweep(&cfg)?;
    write_sweep_csv(&mut std::io::stdout().lock(), &result)?;
    for row in &result.rows {
        eprintln!(
            "{:<16} {:>6} NMSE {:>7.2} dB, closed form {}",
            row.designer.as_str(),
            row.value,
            row.nmse_db,
            row.analytic_nmse_db().map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}
