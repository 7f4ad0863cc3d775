//! Experiment runner: sweeps annealing times for a configured model and
//! emits plot-ready tables mirroring the library's models.
//!
//! Exit codes: 0 success, 1 partial failure (some rows or methods failed),
//! 2 configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use annlab::schedule::{InterpTable, OnsetWindow, Schedule};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "annlab", version, about = "Annealing-dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep annealing times for a dynamical model from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; a `.manifest.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the sweep (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Equilibrium tables: Gibbs probabilities or chain mean energies.
    Gibbs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover (h₁, h₂, J, β) from sampled two-spin frequencies.
    Extract {
        /// Frequency CSV (`f1,f2,f3,f4[,count]`) or raw sample file
        /// (one `+-`-style configuration per line).
        #[arg(long)]
        input: PathBuf,
        /// Bundled instance name (2s1…2s4) or a problem JSON path.
        #[arg(long)]
        problem: String,
        /// Bootstrap resamples for error bars (0 disables).
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump A(s), B(s) and optionally B′ as CSV.
    Schedules {
        #[arg(long, default_value = "standard")]
        kind: String,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Two-column override tables instead of the built-in fits.
        #[arg(long, requires = "b_table")]
        a_table: Option<PathBuf>,
        #[arg(long, requires = "a_table")]
        b_table: Option<PathBuf>,
        #[arg(long, requires = "t_a_us")]
        onset_start_us: Option<f64>,
        #[arg(long, requires = "t_a_us")]
        onset_end_us: Option<f64>,
        /// Anneal time for the B′ column, µs.
        #[arg(long)]
        t_a_us: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            jobs,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seeds = Some(vec![seed]);
            }
            let outcome = commands::run_sweep(&cfg, jobs)?;
            commands::emit(&outcome, out.as_ref())?;
            if outcome.failed_rows > 0 {
                eprintln!("{} row(s) failed; see the manifest", outcome.failed_rows);
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gibbs { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = commands::run_gibbs(&cfg)?;
            commands::emit(&outcome, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Extract {
            input,
            problem,
            bootstrap,
            seed,
            out,
        } => {
            let table = commands::load_frequencies(&input)?;
            let problem = commands::resolve_problem_arg(&problem)?;
            let report = commands::run_extract(&table, &problem, bootstrap, seed)?;
            print!("{}", report.text);
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report.json)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(if report.any_success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Schedules {
            kind,
            points,
            a_table,
            b_table,
            onset_start_us,
            onset_end_us,
            t_a_us,
            out,
        } => {
            let schedule = match (&a_table, &b_table) {
                (Some(a), Some(b)) => {
                    Schedule::tabulated(InterpTable::load(a)?, InterpTable::load(b)?)
                }
                _ => match kind.to_ascii_lowercase().as_str() {
                    "standard" => Schedule::standard(),
                    "fast" => Schedule::fast(),
                    other => anyhow::bail!("unknown schedule kind {other:?}"),
                },
            };
            let onset = match t_a_us {
                Some(t_a_us) => Some((
                    OnsetWindow::from_us(
                        onset_start_us.unwrap_or(0.0),
                        onset_end_us.unwrap_or(0.0),
                    )?,
                    t_a_us * 1e3,
                )),
                None => None,
            };
            let csv = commands::run_schedules(&schedule, points, onset)?;
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
