//! Sweep output against the closed forms on a 64-antenna Gaussian setup.

use icefill::design::Designer;
use icefill::experiment::{
    run_sweep, ChannelConfig, EstimatorChoice, ExperimentConfig, GeometryConfig, SweepAxis, SweepConfig,
};
use icefill::io::write_matrix;
use icefill::kernels::{bessel_kernel, UpaGeometry};

#[test]
fn normalized_mse_matches_closed_form_and_wf_tracks_if() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = bessel_kernel(&UpaGeometry::with_ratio(8, 8, 0.125).unwrap(), 0.85).unwrap();
    let path = dir.path().join("kernel.csv");
    write_matrix(&path, kernel.matrix()).unwrap();
    let snrs = vec![-10.0, -5.0, 0.0, 5.0, 10.0];
    let cfg = ExperimentConfig {
        trials: 3000,
        base_seed: 17,
        designers: vec![Designer::IceFilling, Designer::WaterFilling],
        estimators: vec![EstimatorChoice::Mmse],
        geometry: GeometryConfig { mx: 8, my: 8, d_over_lambda: 0.125 },
        channel: ChannelConfig { kernel_file: Some(path), ..ChannelConfig::default() },
        sweep: SweepConfig { axis: SweepAxis::SnrDb, values: snrs.clone(), snr_db: 0.0, q: 64 },
        ..ExperimentConfig::default()
    };
    let res = run_sweep(&cfg).unwrap();

    // NMSE proper is a mean of per-trial ratios; the closed form describes
    // E‖h - ĥ‖² / E‖h‖², which the mse and signal_power columns give.
    let row = res.row(Designer::IceFilling, EstimatorChoice::Mmse, 0.0).unwrap();
    let normalized = 10.0 * (row.mse / row.signal_power).log10();
    let analytic = row.analytic_nmse_db().unwrap();
    assert!((normalized - analytic).abs() <= 0.15, "{normalized} vs {analytic}");

    for s in snrs {
        let a = res.row(Designer::IceFilling, EstimatorChoice::Mmse, s).unwrap().nmse_db;
        let b = res.row(Designer::WaterFilling, EstimatorChoice::Mmse, s).unwrap().nmse_db;
        assert!((a - b).abs() <= 0.75, "SNR {s}: if {a} vs wf {b}");
    }
}
