//! Experiment configuration: one JSON document describing a model, a
//! problem, a schedule, and the anneal-time sweep.
//!
//! Defaults follow the published operating points: β = 6.93 (29.7 mK)
//! unless a temperature is given, base rate c = 0.01/ns, onset window
//! (0, 1.2 µs) for the lindblad/markov models and none elsewhere, and the
//! per-model time steps listed in [`Model::default_dt_ns`].

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use annlab::problems::instances;
use annlab::schedule::InterpTable;
use annlab::{IsingProblem, OnsetWindow, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Schrodinger,
    Bloch,
    Lindblad,
    Markov,
    Spinbath,
    Gibbs,
}

impl Model {
    pub fn default_dt_ns(self) -> f64 {
        match self {
            Model::Schrodinger | Model::Bloch | Model::Spinbath => 0.01,
            Model::Lindblad => 0.1,
            Model::Markov => 1.0,
            Model::Gibbs => 0.0,
        }
    }
}

/// Problem reference: a bundled instance name, an inline document, a file
/// path, or a uniform open chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Name(String),
    Inline { n: usize, h: Vec<f64>, #[serde(default)] j: Vec<(usize, usize, f64)> },
    Path { path: String },
    Chain { chain: ChainSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    pub j: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
}

impl ProblemRef {
    pub fn resolve(&self) -> Result<IsingProblem> {
        match self {
            ProblemRef::Name(name) => instances::by_name(name)
                .with_context(|| format!("unknown bundled instance {name:?}")),
            ProblemRef::Inline { n, h, j } => {
                if h.len() != *n {
                    bail!("field array length {} does not match n = {n}", h.len());
                }
                Ok(IsingProblem::new(h.clone(), j.clone())?)
            }
            ProblemRef::Path { path } => Ok(IsingProblem::load(path)?),
            ProblemRef::Chain { chain } => {
                let n = chain
                    .n
                    .context("chain problems need a single `n` for this model")?;
                Ok(IsingProblem::chain(n, chain.j)?)
            }
        }
    }

    pub fn chain_lengths(&self) -> Option<(f64, Vec<usize>)> {
        match self {
            ProblemRef::Chain { chain } => {
                let lengths = match (&chain.n_list, chain.n) {
                    (Some(list), _) => list.clone(),
                    (None, Some(n)) => vec![n],
                    (None, None) => return None,
                };
                Some((chain.j, lengths))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleRef {
    Kind(String),
    Tables { a_table: String, b_table: String },
}

impl Default for ScheduleRef {
    fn default() -> Self {
        ScheduleRef::Kind("standard".into())
    }
}

impl ScheduleRef {
    pub fn resolve(&self) -> Result<Schedule> {
        Ok(match self {
            ScheduleRef::Kind(k) => match k.to_ascii_lowercase().as_str() {
                "standard" => Schedule::standard(),
                "fast" => Schedule::fast(),
                other => bail!("unknown schedule kind {other:?}"),
            },
            ScheduleRef::Tables { a_table, b_table } => Schedule::tabulated(
                InterpTable::load(a_table)?,
                InterpTable::load(b_table)?,
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OnsetConfig {
    #[serde(default)]
    pub start_us: f64,
    #[serde(default)]
    pub end_us: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRange {
    pub from_us: f64,
    pub to_us: f64,
    pub points: usize,
}

/// The anneal-time sweep, in µs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub list_us: Option<Vec<f64>>,
    #[serde(default)]
    pub log_range_us: Option<LogRange>,
}

impl SweepSpec {
    pub fn anneal_times_ns(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if let Some(list) = &self.list_us {
            out.extend(list.iter().map(|us| us * 1e3));
        }
        if let Some(range) = &self.log_range_us {
            if range.points < 2 || range.from_us <= 0.0 || range.to_us <= range.from_us {
                bail!("log range needs 0 < from < to and at least 2 points");
            }
            let (lo, hi) = (range.from_us.ln(), range.to_us.ln());
            for k in 0..range.points {
                let f = k as f64 / (range.points - 1) as f64;
                out.push((lo + f * (hi - lo)).exp() * 1e3);
            }
        }
        if out.is_empty() {
            bail!("sweep is empty: set t_a.list_us or t_a.log_range_us");
        }
        if out.iter().any(|&t| !(t > 0.0)) {
            bail!("anneal times must be positive");
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BathConfig {
    #[serde(default = "default_n_b")]
    pub n_b: usize,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_n_b() -> usize {
    16
}
fn default_g() -> f64 {
    0.001
}
fn default_k() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    0.1
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            n_b: default_n_b(),
            g: default_g(),
            k: default_k(),
            omega: default_omega(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub problem: ProblemRef,
    #[serde(default)]
    pub schedule: ScheduleRef,
    #[serde(default)]
    pub onset: Option<OnsetConfig>,
    /// Dimensionless inverse temperature; overridden by `temperature_mk`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub temperature_mk: Option<f64>,
    /// Base dissipation rate c in 1/ns (lindblad, markov).
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub t1_ns: Option<f64>,
    #[serde(default)]
    pub t2_ns: Option<f64>,
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub bath: Option<BathConfig>,
    #[serde(default)]
    pub t_a: Option<SweepSpec>,
    #[serde(default)]
    pub dt_ns: Option<f64>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub emit_mean_energy: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.as_ref().display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config JSON")?;
        Ok(cfg)
    }

    /// β from the explicit field or the temperature, default 6.93.
    pub fn beta(&self) -> f64 {
        if let Some(t) = self.temperature_mk {
            annlab::equilibrium::beta_from_temperature_mk(t)
        } else {
            self.beta.unwrap_or(6.93)
        }
    }

    pub fn base_rate(&self) -> f64 {
        self.c.unwrap_or(0.01)
    }

    pub fn dt_ns(&self) -> f64 {
        self.dt_ns.unwrap_or_else(|| self.model.default_dt_ns())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![1])
    }

    pub fn onset_window(&self) -> Result<OnsetWindow> {
        Ok(match self.onset {
            Some(w) => OnsetWindow::from_us(w.start_us, w.end_us)?,
            None => match self.model {
                // Published default for the rate-equation models.
                Model::Lindblad | Model::Markov => OnsetWindow::from_us(0.0, 1.2)?,
                _ => OnsetWindow::none(),
            },
        })
    }
}
