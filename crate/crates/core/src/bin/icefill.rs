use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use icefill::experiment::{
    analytic_csv, analyze_cmd, design_cmd, estimate_cmd, run_sweep, write_sweep_csv, AnalyzeConfig, DesignConfig,
    EstimateConfig, ExperimentConfig,
};
use icefill::io::format_matrix;
use icefill::Result;

/// Pilot observation-matrix design and channel estimation for dense arrays.
#[derive(Parser)]
#[command(name = "icefill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design an observation matrix from a kernel file.
    Design(Common),
    /// Estimate a channel from received pilots.
    Estimate(Common),
    /// Tabulate closed-form MSEs for a spectrum.
    Analyze(Common),
    /// Run a Monte-Carlo sweep.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when neither this nor the config names one.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design(c) => {
            let mut cfg = DesignConfig::from_file(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            let out = design_cmd(&cfg)?;
            match c.out.or(cfg.output) {
                Some(p) => {
                    if let Some(alloc) = out.write(&p, cfg.allocation_output.as_deref())? {
                        eprintln!("allocation written to {}", alloc.display());
                    }
                }
                None => emit(None, &format_matrix(out.w.matrix()))?,
            }
        }
        Command::Estimate(c) => {
            let mut cfg = EstimateConfig::from_file(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            let out = estimate_cmd(&cfg)?;
            emit(c.out.or(cfg.output).as_deref(), &out.to_csv(cfg.estimator))?;
        }
        Command::Analyze(c) => {
            let cfg = AnalyzeConfig::from_file(&c.config)?;
            let rows = analyze_cmd(&cfg)?;
            emit(c.out.or(cfg.output).as_deref(), &analytic_csv(&rows)?)?;
        }
        Command::Sweep(c) => {
            let mut cfg = ExperimentConfig::from_file(&c.config)?;
            cfg.base_seed = c.seed.unwrap_or(cfg.base_seed);
            let result = run_sweep(&cfg)?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &result)?;
            emit(c.out.or(cfg.output).as_deref(), &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("icefill: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
