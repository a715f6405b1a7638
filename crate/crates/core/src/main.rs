use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rydsense::cli::{execute, CliError, RunConfig, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    EnhancementCurve,
    TransmissionScan,
    SensitivityMap,
    LineScan,
    Susceptibility,
    SteadyState,
    Verify,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::EnhancementCurve => Subcommand::EnhancementCurve,
            Command::TransmissionScan => Subcommand::TransmissionScan,
            Command::SensitivityMap => Subcommand::SensitivityMap,
            Command::LineScan => Subcommand::LineScan,
            Command::Susceptibility => Subcommand::Susceptibility,
            Command::SteadyState => Subcommand::SteadyState,
            Command::Verify => Subcommand::Verify,
        }
    }
}

/// Rydberg electrometer sensitivity with coherent and squeezed readout.
///
/// Exit status: 0 success, 1 configuration error, 2 numerical failure.
/// RYDSENSE_THREADS caps sweep parallelism (0 = all cores).
#[derive(Debug, Parser)]
#[command(name = "rydsense", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's `output` key, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config)
        .map_err(CliError::from)
        .and_then(|config| {
            let out = args.out.clone().or_else(|| config.output.clone());
            execute(args.command.into(), &config, out.as_deref())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rydsense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
