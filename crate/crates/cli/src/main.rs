use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatopt_cli::commands::{self, SweepKind};
use heatopt_cli::{CliError, RunConfig};

/// Level-set design of steady heat conduction devices.
#[derive(Parser)]
#[command(name = "heatopt", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set optimizer.max_iterations=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One state and adjoint solve for the initial field.
    Solve,
    /// Full optimization.
    Optimize,
    /// Annulus sweeps: `radius`, `delta` or `refinement`.
    Sweep {
        #[arg(default_value = "radius")]
        kind: String,
    },
    /// Analytic annulus curves.
    Oracle,
    /// Print the effective configuration.
    Config,
}

const OUTPUT_ENV: &str = "HEATOPT_OUTPUT_DIR";

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|err| CliError::ReadConfig { path: path.clone(), err })?,
        ),
        None => None,
    };
    let mut cfg = RunConfig::from_sources(text.as_deref(), &args.overrides)?;
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        cfg.output_dir = dir.into();
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = load(args)?;
    let text = match &args.command {
        Command::Solve => format!("{}\n", commands::solve(&cfg)?),
        Command::Optimize => format!("{}\n", commands::optimize(&cfg)?),
        Command::Sweep { kind } => format!("{}\n", commands::sweep(&cfg, kind.parse::<SweepKind>()?)?),
        Command::Oracle => format!("{}\n", commands::oracle(&cfg)?),
        Command::Config => toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?,
    };
    // a closed pipe (e.g. `| head`) is not an error
    let _ = std::io::stdout().write_all(text.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
