use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use landau_radial_cli::{execute, Command, RunConfig, Status};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Run,
    Verify,
    Barriers,
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "landau-radial", version, about = "Radial Landau / Krieger-Strain simulator")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON configuration (schema 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and Monte Carlo.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match RunConfig::load(&cli.config).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(1);
    }
    let out = cli.out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let command = match cli.command {
        Cmd::Run => Command::Run,
        Cmd::Verify => Command::Verify,
        Cmd::Barriers => Command::Barriers,
        Cmd::Sweep => Command::Sweep,
    };
    let result = match cli.workers {
        Some(k) if command != Command::Sweep => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| execute(&config, command, &out, Some(k)))),
        workers => execute(&config, command, &out, workers),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Incomplete) => {
            eprintln!("error: a run required to complete stopped early; see summary.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
