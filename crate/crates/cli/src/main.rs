//! `flowid`: simulate the rotor-bearing system, sweep supply flowrates and
//! identify the oil supply flowrates from vibration response.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::config::{parse_mesh, Mesh, Overrides, RunConfig};
use crate::error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "flowid",
    version,
    about = "Oil supply flowrate identification for journal-bearing rotors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the unbalance response at the configured supply flowrates.
    Simulate(Common),
    /// Sweep the supply flowrates and tabulate the response parameters.
    Sensitivity(Common),
    /// Identify the supply flowrates from a reference measurement.
    Identify(Common),
    /// Identify every case of a grid of reference flowrates.
    Campaign(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Noise seed, overriding `noise.seed` and `campaign.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Film mesh as `N` or `N_CIRCxN_AXIAL`.
    #[arg(long, value_parser = parse_mesh)]
    mesh: Option<Mesh>,
    /// Simulated time [s], overriding `operating.duration_s`.
    #[arg(long)]
    duration: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        config.apply(&Overrides {
            out: self.out.clone(),
            seed: self.seed,
            mesh: self.mesh,
            duration_s: self.duration,
        })?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let summary = commands::simulate(&args.load()?)?;
            for n in &summary.nodes {
                println!(
                    "node {}: fb = {:.6}, phi = {:.6} rad",
                    n.node, n.fb, n.phi_rad
                );
            }
        }
        Command::Sensitivity(args) => {
            let failures = commands::sensitivity(&args.load()?)?;
            if failures > 0 {
                return Err(CliError::Internal(format!(
                    "{failures} sweep points failed, see sweep.csv"
                )));
            }
        }
        Command::Identify(args) => {
            let report = commands::identify(&args.load()?)?;
            let [q1, q2] = report.identified_ml_min;
            println!(
                "identified Q = ({q1:.3}, {q2:.3}) ml/min, converged = {}",
                report.converged
            );
            if let Some([e1, e2]) = report.relative_errors_percent {
                println!("relative errors: {e1:.3}%, {e2:.3}%");
            }
            if !report.converged {
                return Err(CliError::NotConverged {
                    total_error: report.total_error,
                });
            }
        }
        Command::Campaign(args) => {
            let summary = commands::campaign(&args.load()?)?;
            println!(
                "{} of {} cases completed, {} converged",
                summary.completed, summary.cases, summary.converged
            );
            if let (Some(mean), Some(max)) = (
                summary.mean_abs_error_percent,
                summary.max_abs_error_percent,
            ) {
                println!(
                    "mean |error|: {:.3}%, {:.3}%; max |error|: {:.3}%, {:.3}%",
                    mean[0], mean[1], max[0], max[1]
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => {
            info!("done");
            ExitCode::from(exit::SUCCESS as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
