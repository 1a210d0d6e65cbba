//! `gpe`: ground states of the Gross-Pitaevskii energy from a TOML config.
//!
//! Exit codes: 0 ok, 1 config or I/O error, 2 not converged, 3 verification failure.

mod commands;
mod config;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpe_core::Error;
use log::LevelFilter;

use commands::Status;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "gpe",
    version,
    about = "Explicit stabilized ETD gradient flow for Gross-Pitaevskii ground states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 makes every output byte-identical across runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the random functions drawn by `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate to the ground state and write history, summary and state.
    Solve { config: PathBuf },
    /// Refinement study in tau or h; succeeds iff observed orders are in range.
    Study { config: PathBuf },
    /// Run the per-step and operator identity checks.
    Verify { config: PathBuf },
}

fn init_logging() {
    let level = match std::env::var("GPE_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        Ok("info") | Err(_) => LevelFilter::Info,
        Ok(other) => {
            eprintln!("warning: GPE_LOG={other} not one of quiet, info, debug; using info");
            LevelFilter::Info
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } | Error::Study { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let path = match &cli.command {
        Command::Solve { config } | Command::Study { config } | Command::Verify { config } => config,
    };
    let result = RunConfig::load(path).and_then(|cfg| {
        let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        match cli.command {
            Command::Solve { .. } => commands::solve(&cfg, &out),
            Command::Study { .. } => commands::study(&cfg, &out),
            Command::Verify { .. } => commands::verify(&cfg, &out, cli.seed),
        }
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("not converged");
            ExitCode::from(2)
        }
        Ok(Status::VerificationFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
