//! Command-line entry point: mesh generation, runs, post-processing, PSD
//! analysis and CFL/cost benchmarking.
//!
//! Exit codes: 0 success, 2 configuration error, 3 divergence (or an
//! all-unstable benchmark ladder), 4 missing input.

mod commands;
mod config;
mod csvio;
mod statsio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use dgles::error::Error;

#[derive(Parser)]
#[command(
    name = "dgles",
    about = "High-order DG spectral element solver for compressible Navier-Stokes with explicit (Vreman) and implicit (Kennedy-Gruber split-form) LES"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured mesh and write it to a mesh file.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        /// Output path (default: <output_dir>/mesh.dgm).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured case, emitting forces, checkpoints and statistics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (overrides DGLES_THREADS and the config).
        #[arg(long)]
        threads: Option<usize>,
        /// Force deterministic ordered reductions (always on; kept for
        /// scripting compatibility).
        #[arg(long)]
        deterministic: bool,
        /// Resume from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Post-process a completed run: surface.csv, wake profiles, VTK, psd.csv.
    Post {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Welch PSD of the recorded force series.
    Psd {
        #[arg(long)]
        config: PathBuf,
    },
    /// CFL-ramp benchmark and cost table over the two formulations.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// both | eles | iles.
        #[arg(long, default_value = "both")]
        formulation: String,
    },
}

fn thread_count(flag: Option<usize>, config: &RunConfig) -> Option<usize> {
    if let Some(n) = flag {
        return (n > 0).then_some(n);
    }
    if let Ok(v) = std::env::var("DGLES_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                return Some(n);
            }
        }
    }
    (config.threads > 0).then_some(config.threads)
}

fn install_pool(threads: Option<usize>) {
    if let Some(n) = threads {
        // ignore failure: the global pool may already exist in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => 3,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 4,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<(), (Error, u8)> {
    let wrap = |e: Error| {
        let code = exit_code_for(&e);
        (e, code)
    };
    match cli.command {
        Command::Mesh { config, out } => {
            let cfg = load_config(&config)?;
            commands::cmd_mesh(&cfg, out).map(|_| ()).map_err(wrap)
        }
        Command::Run {
            config,
            threads,
            deterministic: _,
            resume,
        } => {
            let cfg = load_config(&config)?;
            install_pool(thread_count(threads, &cfg));
            commands::cmd_run(&cfg, resume.as_deref())
                .map(|_| ())
                .map_err(wrap)
        }
        Command::Post { config, threads } => {
            let cfg = load_config(&config)?;
            install_pool(thread_count(threads, &cfg));
            commands::cmd_post(&cfg).map_err(wrap)
        }
        Command::Psd { config } => {
            let cfg = load_config(&config)?;
            commands::cmd_psd(&cfg).map_err(wrap)
        }
        Command::Bench {
            config,
            threads,
            formulation,
        } => {
            let cfg = load_config(&config)?;
            install_pool(thread_count(threads, &cfg));
            match commands::cmd_bench(&cfg, &formulation) {
                Ok(true) => Ok(()),
                Ok(false) => Err((
                    Error::Divergence {
                        step: 0,
                        stage: 0,
                        detail: "no stable CFL on the tested ladder".into(),
                    },
                    3,
                )),
                Err(e) => Err(wrap(e)),
            }
        }
    }
}

fn load_config(path: &std::path::Path) -> Result<RunConfig, (Error, u8)> {
    if !path.exists() {
        let e = Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("config file {path:?} not found"),
        ));
        return Err((e, 4));
    }
    RunConfig::load(path).map_err(|e| {
        let code = exit_code_for(&e);
        (e, code)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((e, code)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
