//! Batch front door for the experiment suite.
//!
//! Exit codes: 0 all hard assertions passed, 1 an assertion failed,
//! 2 usage/configuration error.

use clap::{Parser, Subcommand};
use loctime::config::{ExperimentConfig, EXPERIMENT_IDS};
use loctime::{runner, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "loctime",
    about = "Monte Carlo laboratory for random-walk local time",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write manifest + reports.
    Run {
        /// key = value config file (flat format; see README)
        #[arg(long)]
        config: Option<PathBuf>,
        /// experiment id (required unless the config file names one)
        #[arg(long, value_parser = EXPERIMENT_IDS)]
        experiment: Option<String>,
        /// master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// worker thread count (0 = library default)
        #[arg(long)]
        workers: Option<usize>,
        /// output directory override
        #[arg(long)]
        out: Option<PathBuf>,
        /// set any config key, repeatable: --set reps=1000
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Merge report files from a run directory into one summary.
    Report {
        /// directory holding *-results.json files
        #[arg(long = "in")]
        input: PathBuf,
        /// csv or json
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn build_config(
    config: Option<PathBuf>,
    experiment: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    sets: Vec<String>,
) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&config, &experiment) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(id)) => ExperimentConfig::new(id)?,
        (None, None) => {
            return Err(Error::Config(
                "either --config or --experiment is required".into(),
            ))
        }
    };
    // flags win over the file
    if let Some(id) = experiment {
        cfg.set("experiment", &id)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(dir) = out {
        cfg.out_dir = dir;
    }
    for kv in sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{}`", kv)))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            experiment,
            seed,
            workers,
            out,
            sets,
        } => {
            let cfg = match build_config(config, experiment, seed, workers, out, sets) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("loctime: {}", e);
                    return ExitCode::from(2);
                }
            };
            match runner::run(&cfg) {
                Ok(outcome) => {
                    println!("experiment: {} (seed {})", cfg.experiment, cfg.seed);
                    for line in &outcome.lines {
                        println!("  {}", line);
                    }
                    println!(
                        "reports under {} ({} files)",
                        cfg.out_dir.display(),
                        outcome.files.len()
                    );
                    if outcome.hard_pass {
                        println!("result: PASS");
                        ExitCode::SUCCESS
                    } else {
                        println!("result: FAIL");
                        ExitCode::from(1)
                    }
                }
                Err(e @ (Error::Config(_) | Error::UnknownExperiment(_))) => {
                    eprintln!("loctime: {}", e);
                    ExitCode::from(2)
                }
                Err(Error::Io(e)) => {
                    eprintln!("loctime: output error: {}", e);
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("loctime: {}", e);
                    ExitCode::from(1)
                }
            }
        }
        Command::Report { input, format } => {
            let stdout = std::io::stdout();
            match runner::report(&input, &format, &mut stdout.lock()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("loctime: {}", e);
                    ExitCode::from(2)
                }
            }
        }
    }
}
