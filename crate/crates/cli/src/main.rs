//! `traplab`: seeded experiments on the directed trap model.
//!
//! Every command writes its outputs and a `manifest.json` into the output
//! directory. `traplab replay --manifest FILE` re-runs a manifest and checks
//! that every output digest matches.

mod jobs;
mod output;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use traplab::parallel::Execution;

use jobs::Job;
use output::{write_manifest, write_outputs, RunManifest, MANIFEST_FILE};
use settings::{parse_count, resolve, FileConfig, Overrides, Settings};

const DEFAULT_OUT_DIR: &str = "traplab-out";

/// Bad input from the command line; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "traplab",
    version,
    about = "Monte Carlo experiments on the directed trap model"
)]
struct Cli {
    /// Tail index of the trap depths, in (0, 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Drift of the embedded walk, in (0, 1/2].
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, value_parser = parse_count)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_count)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory [default: $TRAPLAB_OUT_DIR or ./traplab-out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// TOML file with defaults for any of the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    c_prime: Option<f64>,
    #[arg(long, global = true)]
    beta_exp: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Job(Job),
    /// Re-run a manifest and compare output digests.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os("TRAPLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(job: &Job, settings: &Settings, workers: usize, dir: &std::path::Path) -> anyhow::Result<RunManifest> {
    let start = Instant::now();
    let files = jobs::run(job, settings, Execution::with_workers(workers))?;
    let outputs = write_outputs(dir, &files)?;
    let manifest = RunManifest {
        schema_version: traplab::lab::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        job: job.clone(),
        settings: settings.clone(),
        outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        workers,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    let workers = cli.workers.or(file.workers).unwrap_or(0);
    let dir = out_dir(cli.out_dir.clone(), &file);
    match cli.command {
        Command::Job(job) => {
            let settings = resolve(
                Overrides {
                    alpha: cli.alpha,
                    epsilon: cli.epsilon,
                    seed: cli.seed,
                    trials: cli.trials,
                    kappa: cli.kappa,
                    gamma: cli.gamma,
                    c_prime: cli.c_prime,
                    beta_exp: cli.beta_exp,
                    tolerance: cli.tolerance,
                },
                &file,
            );
            let settings = settings.resolved().map_err(|e| UsageError(format!("{e:#}")))?;
            let manifest = execute(&job, &settings, workers, &dir)?;
            for name in manifest.outputs.keys() {
                println!("{}", dir.join(name).display());
            }
            println!("{}", dir.join(MANIFEST_FILE).display());
            Ok(())
        }
        Command::Replay { manifest } => {
            let recorded = RunManifest::load(&manifest).map_err(|e| UsageError(format!("{e:#}")))?;
            let dir = match cli.out_dir {
                Some(d) => d,
                None => manifest
                    .parent()
                    .map(|p| p.join("replay"))
                    .context("manifest path has no parent directory")?,
            };
            let workers = cli.workers.unwrap_or(recorded.workers);
            let fresh = execute(&recorded.job, &recorded.settings, workers, &dir)?;
            let mut mismatches = 0;
            for (name, digest) in &recorded.outputs {
                match fresh.outputs.get(name) {
                    Some(d) if d == digest => println!("match    {name}"),
                    _ => {
                        println!("MISMATCH {name}");
                        mismatches += 1;
                    }
                }
            }
            if mismatches > 0 || fresh.outputs.len() != recorded.outputs.len() {
                anyhow::bail!("{mismatches} output(s) differ from the manifest");
            }
            Ok(())
        }
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    if e.downcast_ref::<UsageError>().is_some() {
        return true;
    }
    matches!(
        e.downcast_ref::<traplab::Error>(),
        Some(
            traplab::Error::ParameterDomain { .. }
                | traplab::Error::HorizonTooSmall { .. }
                | traplab::Error::InvalidGrid
                | traplab::Error::Domain(_)
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
