use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasenoise_capacity::bounds::avg_peak_gap;
use phasenoise_capacity::channel::{los_antenna_spacing, wavelength_from_ghz};
use phasenoise_capacity::cli::{emit_plot_script, run_sweep, ExperimentConfig};
use phasenoise_capacity::Error;

/// Capacity bounds for MIMO links with Wiener phase noise.
#[derive(Parser)]
#[command(name = "phasecap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (kind, SNR) task of a configuration and write the CSV.
    Sweep { config: PathBuf },
    /// Write a gnuplot script for a results CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        figure: String,
    },
    /// Antenna spacing that makes a line-of-sight MIMO channel unitary.
    Spacing {
        #[arg(long)]
        freq_ghz: f64,
        #[arg(long)]
        range_m: f64,
        #[arg(long)]
        antennas: usize,
    },
    /// High-SNR capacity loss of a peak constraint against an average one.
    Gap {
        #[arg(long)]
        antennas: usize,
    },
    /// Parse a configuration and print its canonical form.
    Validate { config: PathBuf },
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run_sweep(&cfg)?;
            println!(
                "wrote {} rows to {} ({} computed, {} cached, {} failed)",
                outcome.rows.len(),
                cfg.csv_path().display(),
                outcome.computed,
                outcome.cached,
                outcome.failures.len()
            );
            for (kind, snr, e) in &outcome.failures {
                eprintln!("error: {kind} at {snr} dB: {e}");
            }
            Ok(outcome.exit_code())
        }
        Command::Plot { csv, figure } => {
            let path = emit_plot_script(&csv, &figure)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Spacing {
            freq_ghz,
            range_m,
            antennas,
        } => {
            let d = los_antenna_spacing(wavelength_from_ghz(freq_ghz)?, range_m, antennas)?;
            println!("{d:.4} m");
            Ok(0)
        }
        Command::Gap { antennas } => {
            let nats = avg_peak_gap(antennas)?;
            println!("{nats:.4} nats ({:.4} bits)", nats / std::f64::consts::LN_2);
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.load_matrix()?;
            print!("{}", cfg.canonical());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
