use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lab::{Command, ExperimentConfig, LabError};

/// Damped-wave blow-up laboratory.
#[derive(Debug, Parser)]
#[command(name = "lab", version)]
struct Cli {
    /// decay | lifespan | sweep | odi | predict | verify-propagators
    command: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated, descending.
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let command: Command = cli.command.parse()?;
    let mut cfg = ExperimentConfig::load(Some(command), cli.config.as_deref())?;
    if let Some(p) = cli.p {
        cfg.p = p;
    }
    if let Some(eps) = &cli.eps_list {
        cfg.eps_list = eps.clone();
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure(&cli).and_then(|cfg| lab::run(&cfg));
    match outcome {
        Ok(o) => {
            print!("{}", o.summary);
            ExitCode::from(o.verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
