use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppd_cli::config::{Mode, RunConfig};
use ppd_cli::run::CliError;

#[derive(Parser)]
#[command(name = "ppd", version, about = "Periodically pumped dot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Photon-train trajectory with the closed-form overlay
    Train(RunArgs),
    /// Microlaser steady state (stroboscopic fixed point)
    Laser(RunArgs),
    /// Fixed-point statistics over a parameter grid
    Sweep(RunArgs),
    /// Closed-form curve evaluations
    Curves(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep points (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(mode: Mode, args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(ppd_cli::config::ConfigError::Invalid {
            key: "config".to_string(),
            reason: format!("cannot read {}: {e}", args.config.display()),
        })
    })?;
    let config = RunConfig::parse(mode, &text)?;
    let files = ppd_cli::run::run(&config, &args.out, args.workers)?;
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Train(a) => (Mode::Train, a),
        Command::Laser(a) => (Mode::Laser, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Curves(a) => (Mode::Curves, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
