use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cpchain::config::ExperimentConfig;
use cpchain::experiments::{run, Command};
use cpchain::{Error, Result};

/// Scenery-flow experiments for Bernoulli measures on self-affine carpets.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// One of: dim, scenery, project, distset, render, verify.
    command: String,

    /// INI experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Bits of precision for the rotation angle.
    #[arg(long)]
    precision: Option<usize>,
}

fn execute(cli: &Cli) -> Result<PathBuf> {
    let command: Command = cli.command.parse()?;
    let text = std::fs::read_to_string(&cli.config)?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(bits) = cli.precision {
        config.precision = bits;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
    if let Some(out) = &cli.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    let outcome = run(command, &config, &out)?;
    Ok(outcome.csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(csv) => {
            println!("{}", csv.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_resource_failure() {
        2
    } else {
        1
    }
}
