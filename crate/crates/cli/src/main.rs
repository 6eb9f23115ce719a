use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stripsde_cli::{describe, load_config, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "stripsde", version, about = "Random matrix products, their SDE limits and strip eigenvalue statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// master seed, overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads, overrides the config
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// output directory, overrides the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved model without simulating
    Describe { config: PathBuf },
    /// Run the configured pipeline
    Run { config: PathBuf },
}

fn resolve(cli: &Cli, path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Describe { config } => match resolve(&cli, config).and_then(|c| describe(&c)) {
            Ok((text, failure)) => {
                print!("{text}");
                failure.map_or(ExitCode::SUCCESS, |e| ExitCode::from(e.exit_code() as u8))
            }
            Err(e) => fail(&e),
        },
        Command::Run { config } => match resolve(&cli, config).and_then(|c| run(&c)) {
            Ok(m) => {
                println!("{} finished in {:.2}s; {} replica(s), {} failed", m.pipeline, m.wall_clock_seconds, m.replicas.len(), m.failed_replicas.len());
                for (name, _) in &m.outputs {
                    println!("  {name}");
                }
                ExitCode::from(m.exit_code() as u8)
            }
            Err(e) => fail(&e),
        },
    }
}
