use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dimcert_cli::{run, Invocation, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Estimates, spectrum and dimension certificates.
    Certify,
    /// Integrate one trajectory; norms, far-field masses, snapshots.
    Simulate,
    /// Characteristic roots, spectral cut and dichotomy constant.
    Spectrum,
    /// Measured squeezing ratios for an ensemble of trajectory pairs.
    Squeeze,
    /// Summary table from the artifacts already in --out.
    Report,
}

/// Attractor-dimension certificates for a delayed reaction-diffusion equation.
#[derive(Debug, Parser)]
#[command(name = "dimcert", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (input directory for `report`).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    parallel: Option<usize>,
    /// Write a field snapshot every K steps (simulate).
    #[arg(long, value_name = "K")]
    snapshot_every: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { dimcert_cli::EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let subcommand = match args.command {
        Command::Certify => Subcommand::Certify,
        Command::Simulate => Subcommand::Simulate,
        Command::Spectrum => Subcommand::Spectrum,
        Command::Squeeze => Subcommand::Squeeze,
        Command::Report => Subcommand::Report,
    };
    let inv = Invocation {
        subcommand,
        config: args.config,
        seed: args.seed,
        out: args.out,
        parallel: args.parallel,
        snapshot_every: args.snapshot_every,
    };
    match run(&inv) {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for name in outcome.manifest.files.keys() {
                println!("wrote {}", inv.out.join(name).display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
