//! Subcommand implementations: sweep, gibbs, extract, schedules.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use annlab::bloch::{self, BlochParams};
use annlab::equilibrium;
use annlab::extraction::{self, BetaMethod, FrequencyTable};
use annlab::lindblad::{self, DissipationSpec};
use annlab::markov;
use annlab::problems::instances;
use annlab::schedule::{OnsetWindow, Schedule};
use annlab::schrodinger::{evolve_tdse, AnnealRun};
use annlab::spinbath::{self, BathSpec, RunManifest};
use annlab::{IsingProblem, SpinConfiguration};

use crate::config::{ExperimentConfig, Model};

/// CSV schema revision, echoed in every sidecar manifest.
pub const FORMAT_VERSION: u32 = 1;

pub struct SweepOutcome {
    pub csv: String,
    pub manifest: serde_json::Value,
    pub failed_rows: usize,
}

#[derive(Serialize)]
struct RowReport {
    t_a_ns: f64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_seed: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bath_runs: Option<Vec<RunManifest>>,
}

struct RowData {
    populations: Vec<f64>,
    mean_energy: Option<f64>,
    per_seed: Option<Vec<Vec<f64>>>,
    bath_runs: Option<Vec<RunManifest>>,
}

/// Run the anneal-time sweep of a dynamical model and render the CSV plus
/// its manifest. Row failures are recorded and do not stop the run.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepOutcome> {
    if cfg.model == Model::Gibbs {
        return run_gibbs(cfg);
    }
    let problem = cfg.problem.resolve()?;
    let schedule = cfg.schedule.resolve()?;
    let onset = cfg.onset_window()?;
    let anneal_times = cfg
        .t_a
        .as_ref()
        .context("dynamics sweeps need a t_a block")?
        .anneal_times_ns()?;
    let dt = cfg.dt_ns();
    let seeds = cfg.seeds();
    let is_chain = matches!(cfg.problem, crate::config::ProblemRef::Chain { .. });
    let emit_energy = cfg.emit_mean_energy.unwrap_or(is_chain);

    // Validate model parameters up front so bad configs exit with code 2
    // before any rows run.
    let spec = DissipationSpec::new(cfg.base_rate(), cfg.beta())?;
    let bloch_params = || -> Result<BlochParams> {
        let t1 = cfg.t1_ns.unwrap_or(500.0);
        let t2 = cfg.t2_ns.unwrap_or(125.0);
        let m0 = cfg
            .m0
            .unwrap_or_else(|| bloch::equilibrium_m0(problem.fields()[0], cfg.beta()));
        Ok(BlochParams::new(t1, t2, m0)?)
    };
    let bath = cfg.bath.clone().unwrap_or_default();
    match cfg.model {
        Model::Bloch => {
            if problem.n() != 1 {
                bail!("the bloch model needs a one-spin problem");
            }
            bloch_params()?;
        }
        Model::Lindblad | Model::Markov | Model::Spinbath => {
            if problem.n() != 2 {
                bail!("this model needs a two-spin problem");
            }
        }
        _ => {}
    }

    let compute_row = |&t_a: &f64| -> std::result::Result<RowData, String> {
        let run = || -> Result<RowData> {
            let data = match cfg.model {
                Model::Schrodinger => {
                    let run = AnnealRun::new(
                        problem.clone(),
                        schedule.clone(),
                        onset,
                        t_a,
                        dt.min(t_a),
                    )?;
                    let pops = evolve_tdse(&run)?.populations();
                    RowData {
                        populations: pops.into(),
                        mean_energy: None,
                        per_seed: None,
                        bath_runs: None,
                    }
                }
                Model::Bloch => {
                    let out =
                        bloch::evolve_bloch(&problem, &schedule, &bloch_params()?, t_a, dt.min(t_a))?;
                    RowData {
                        populations: out.populations().into(),
                        mean_energy: None,
                        per_seed: None,
                        bath_runs: None,
                    }
                }
                Model::Lindblad => {
                    let rho =
                        lindblad::evolve_lindblad(&problem, &schedule, &onset, &spec, t_a, dt.min(t_a))?;
                    RowData {
                        populations: rho.diagonal_probabilities()?.into(),
                        mean_energy: None,
                        per_seed: None,
                        bath_runs: None,
                    }
                }
                Model::Markov => {
                    let pops =
                        markov::evolve_markov(&problem, &schedule, &onset, &spec, t_a, dt.min(t_a))?;
                    RowData {
                        populations: pops.into(),
                        mean_energy: None,
                        per_seed: None,
                        bath_runs: None,
                    }
                }
                Model::Spinbath => {
                    let mut per_seed = Vec::with_capacity(seeds.len());
                    let mut manifests = Vec::with_capacity(seeds.len());
                    for &seed in &seeds {
                        let spec = BathSpec::with_coupling_scale(
                            bath.n_b, bath.g, bath.k, bath.omega, seed,
                        )?;
                        manifests.push(RunManifest::new(&spec, &onset, t_a, dt.min(t_a)));
                        let out = spinbath::evolve_bath_tdse(
                            &problem,
                            &schedule,
                            &onset,
                            &spec,
                            t_a,
                            dt.min(t_a),
                        )?;
                        per_seed.push(Vec::from(out.populations));
                    }
                    let dim = per_seed[0].len();
                    let mut mean = vec![0.0; dim];
                    for run in &per_seed {
                        for (m, v) in mean.iter_mut().zip(run) {
                            *m += v / per_seed.len() as f64;
                        }
                    }
                    RowData {
                        populations: mean,
                        mean_energy: None,
                        per_seed: Some(per_seed),
                        bath_runs: Some(manifests),
                    }
                }
                Model::Gibbs => unreachable!("handled above"),
            };
            Ok(data)
        };
        run().map_err(|e| format!("{e:#}")).map(|mut data| {
            if emit_energy {
                let energy: f64 = data
                    .populations
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * problem.energy_of_index(k))
                    .sum();
                data.mean_energy = Some(energy);
            }
            data
        })
    };

    // Dispatch rows to a worker pool; output stays in sweep order.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let results: Vec<std::result::Result<RowData, String>> =
        pool.install(|| anneal_times.par_iter().map(compute_row).collect());

    let dim = 1usize << problem.n();
    let mut header = String::from("t_a_ns");
    for k in 0..dim {
        write!(header, ",p_{k}").unwrap();
    }
    if emit_energy {
        header.push_str(",mean_energy");
    }

    let mut csv = header.clone();
    csv.push('\n');
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for (t_a, res) in anneal_times.iter().zip(results) {
        let mut line = format!("{t_a}");
        match res {
            Ok(data) => {
                for p in &data.populations {
                    write!(line, ",{p}").unwrap();
                }
                if let Some(e) = data.mean_energy {
                    write!(line, ",{e}").unwrap();
                }
                rows.push(RowReport {
                    t_a_ns: *t_a,
                    status: "ok".into(),
                    error: None,
                    per_seed: data.per_seed,
                    bath_runs: data.bath_runs,
                });
            }
            Err(msg) => {
                failed += 1;
                for _ in 0..dim + usize::from(emit_energy) {
                    line.push_str(",nan");
                }
                rows.push(RowReport {
                    t_a_ns: *t_a,
                    status: "error".into(),
                    error: Some(msg),
                    per_seed: None,
                    bath_runs: None,
                });
            }
        }
        csv.push_str(&line);
        csv.push('\n');
    }

    let manifest = json!({
        "format_version": FORMAT_VERSION,
        "tool": "annlab",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "sweep",
        "header": header,
        "config": serde_json::to_value(cfg)?,
        "rows": serde_json::to_value(rows)?,
    });
    Ok(SweepOutcome {
        csv,
        manifest,
        failed_rows: failed,
    })
}

/// Equilibrium predictions: per-configuration Gibbs table for one problem,
/// or the closed-form chain energies over a list of lengths.
pub fn run_gibbs(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let beta = cfg.beta();
    let (header, body) = if let Some((j, lengths)) = cfg.problem.chain_lengths() {
        let mut body = String::new();
        for &n in &lengths {
            let e = equilibrium::chain_mean_energy(n, j, beta)?;
            writeln!(body, "{n},{beta},{e}").unwrap();
        }
        ("n,beta,mean_energy".to_string(), body)
    } else {
        let problem = cfg.problem.resolve()?;
        let probs = equilibrium::gibbs_probabilities(&problem, beta)?;
        let mut body = String::new();
        for k in 0..probs.len() {
            let config = SpinConfiguration::from_index(problem.n(), k)?;
            let spins: String = config
                .spins()
                .iter()
                .map(|&s| if s > 0 { '+' } else { '-' })
                .collect();
            writeln!(
                body,
                "{k},{spins},{},{}",
                problem.energy_of_index(k),
                probs.get(k)
            )
            .unwrap();
        }
        ("index,configuration,energy,probability".to_string(), body)
    };

    let csv = format!("{header}\n{body}");
    let manifest = json!({
        "format_version": FORMAT_VERSION,
        "tool": "annlab",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "gibbs",
        "header": header,
        "config": serde_json::to_value(cfg)?,
    });
    Ok(SweepOutcome {
        csv,
        manifest,
        failed_rows: 0,
    })
}

/// Resolve a problem argument: bundled instance name or a JSON file path.
pub fn resolve_problem_arg(arg: &str) -> Result<IsingProblem> {
    if let Some(p) = instances::by_name(arg) {
        return Ok(p);
    }
    IsingProblem::load(arg).with_context(|| {
        format!("{arg:?} is neither a bundled instance (2s1…2s4) nor a readable problem file")
    })
}

/// Load a frequency table from a CSV document or a raw sample file.
pub fn load_frequencies(path: &Path) -> Result<FrequencyTable> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.to_ascii_lowercase().starts_with("f1") {
        Ok(FrequencyTable::from_csv(&text)?)
    } else {
        Ok(FrequencyTable::from_samples(&text)?)
    }
}

pub struct ExtractReport {
    pub text: String,
    pub json: serde_json::Value,
    pub any_success: bool,
}

/// Run both extraction methods side by side, with bootstrap error bars when
/// the sample count is known.
pub fn run_extract(
    table: &FrequencyTable,
    problem: &IsingProblem,
    resamples: usize,
    seed: u64,
) -> Result<ExtractReport> {
    let mut text = String::new();
    let mut report = serde_json::Map::new();
    let mut any = false;

    writeln!(
        text,
        "{:<12} {:>9} {:>9} {:>9} {:>9} {:>8} {:>16}",
        "method", "h1_hat", "h2_hat", "j_hat", "beta", "T_mK", "bootstrap_sigma"
    )
    .unwrap();

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let sigma = |method: BetaMethod, rng: &mut rand_chacha::ChaCha12Rng| -> Option<f64> {
        if resamples == 0 || table.count().is_none() {
            return None;
        }
        extraction::bootstrap_beta(table, problem, method, resamples, rng)
            .ok()
            .map(|s| s.std_dev)
    };

    match extraction::extract_model(table, problem) {
        Ok(m) => {
            any = true;
            let sig = sigma(BetaMethod::LogRatio, &mut rng);
            writeln!(
                text,
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.2} {}",
                "log-ratio",
                m.h1_hat,
                m.h2_hat,
                m.j_hat,
                m.beta,
                equilibrium::temperature_mk_from_beta(m.beta),
                sig.map_or("-".into(), |s| format!("{:>16.4}", s)),
            )
            .unwrap();
            report.insert(
                "log_ratio".into(),
                json!({
                    "h1_hat": m.h1_hat, "h2_hat": m.h2_hat, "j_hat": m.j_hat,
                    "beta": m.beta,
                    "temperature_mk": equilibrium::temperature_mk_from_beta(m.beta),
                    "bootstrap_sigma": sig,
                }),
            );
        }
        Err(e) => {
            writeln!(text, "{:<12} failed: {e}", "log-ratio").unwrap();
            report.insert("log_ratio".into(), json!({ "error": e.to_string() }));
        }
    }

    match extraction::extract_beta_energy(table, problem) {
        Ok(beta) => {
            any = true;
            let sig = sigma(BetaMethod::MeanEnergy, &mut rng);
            writeln!(
                text,
                "{:<12} {:>9} {:>9} {:>9} {:>9.4} {:>8.2} {}",
                "mean-energy",
                "-",
                "-",
                "-",
                beta,
                equilibrium::temperature_mk_from_beta(beta),
                sig.map_or("-".into(), |s| format!("{:>16.4}", s)),
            )
            .unwrap();
            report.insert(
                "mean_energy".into(),
                json!({
                    "beta": beta,
                    "temperature_mk": equilibrium::temperature_mk_from_beta(beta),
                    "bootstrap_sigma": sig,
                }),
            );
        }
        Err(e) => {
            writeln!(text, "{:<12} failed: {e}", "mean-energy").unwrap();
            report.insert("mean_energy".into(), json!({ "error": e.to_string() }));
        }
    }

    let json = json!({
        "format_version": FORMAT_VERSION,
        "tool": "annlab",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "extract",
        "frequencies": table.frequencies().to_vec(),
        "count": table.count(),
        "methods": report,
    });
    Ok(ExtractReport {
        text,
        json,
        any_success: any,
    })
}

/// Dump the schedule functions as CSV: s, A, B, and B′ when a window and
/// anneal time are given.
pub fn run_schedules(
    schedule: &Schedule,
    points: usize,
    onset: Option<(OnsetWindow, f64)>,
) -> Result<String> {
    if points < 2 {
        bail!("need at least two sample points");
    }
    let mut out = String::from("s,a_ghz,b_ghz");
    if onset.is_some() {
        out.push_str(",b_prime_ghz");
    }
    out.push('\n');
    for k in 0..points {
        let s = k as f64 / (points - 1) as f64;
        let a = schedule.eval_a(s)?;
        let b = schedule.eval_b(s)?;
        write!(out, "{s},{a},{b}").unwrap();
        if let Some((window, t_a_ns)) = &onset {
            let bp = schedule.eval_b_prime(window, s * t_a_ns, *t_a_ns)?;
            write!(out, ",{bp}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write CSV + sidecar manifest, or print the CSV when no path is given.
pub fn emit(outcome: &SweepOutcome, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, &outcome.csv)
                .with_context(|| format!("writing {}", path.display()))?;
            let manifest_path = manifest_path(path);
            std::fs::write(
                &manifest_path,
                serde_json::to_string_pretty(&outcome.manifest)?,
            )
            .with_context(|| format!("writing {}", manifest_path.display()))?;
        }
        None => print!("{}", outcome.csv),
    }
    Ok(())
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}
