use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use druid_core::harness::{run_experiment, ExperimentConfig, Overrides};

/// Run a decentralized optimization experiment and write its trace CSV.
#[derive(Debug, Parser)]
#[command(name = "druid", version)]
struct Cli {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    overrides: Overrides,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => {
            ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply(&cli.overrides);
    if cli.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let origin = cli.config.as_ref().map_or("defaults".to_string(), |p| p.display().to_string());
    let out = run_experiment(&cfg).with_context(|| format!("running experiment from {origin}"))?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
