//! Maximum-entropy recovery of two-spin model parameters from sampled
//! state frequencies.
//!
//! Given frequencies (f₁, f₂, f₃, f₄) for (↑↑, ↑↓, ↓↑, ↓↓), the spin
//! averages are
//!
//! ```text
//! Ŝ₁  = f₁ + f₂ − f₃ − f₄
//! Ŝ₂  = f₁ − f₂ + f₃ − f₄
//! Ŝ₁₂ = f₁ − f₂ − f₃ + f₄
//! ```
//!
//! **Log-ratio method** ([`extract_model`]): the maximum-entropy distribution
//! constrained by all three averages is p ∝ e^{−λ₁S₁ − λ₂S₂ − λ₃S₁S₂}, whose
//! multipliers have the closed form
//!
//! ```text
//! λ₁ = ¼·ln(f₃f₄ / f₁f₂),  λ₂ = ¼·ln(f₂f₄ / f₁f₃),  λ₃ = ¼·ln(f₂f₃ / f₁f₄),
//! ```
//!
//! after which β = (λ₁² + λ₂² + λ₃²)/(h₁λ₁ + h₂λ₂ + Jλ₃) projects onto the
//! programmed parameters and ĥ = λ/β. It fails loudly on any zero frequency.
//!
//! **Mean-energy method** ([`extract_beta_energy`]): constrain only the mean
//! energy under the programmed (h₁, h₂, J) and solve the scalar equation
//! ⟨E⟩_emp = ⟨E⟩_Gibbs(β) by bracketed bisection.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::problems::IsingProblem;

/// Empirical frequencies of the four two-spin basis states, with the sample
/// count behind them when known (needed for smoothing and bootstrap).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    f: [f64; 4],
    count: Option<u64>,
}

impl FrequencyTable {
    pub fn new(f: [f64; 4], count: Option<u64>) -> Result<Self> {
        if f.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParams(format!("frequencies must be ≥ 0: {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("frequencies sum to {sum}, not 1")));
        }
        Ok(Self { f, count })
    }

    pub fn from_counts(counts: [u64; 4]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParams("no samples".into()));
        }
        let f = counts.map(|c| c as f64 / total as f64);
        Ok(Self { f, count: Some(total) })
    }

    /// Tally raw two-spin sample strings, one per line, e.g. `+-` or `du`.
    pub fn from_samples(text: &str) -> Result<Self> {
        let mut counts = [0u64; 4];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let config = crate::problems::SpinConfiguration::parse(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if config.n() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected 2 spins, got {}",
                    lineno + 1,
                    config.n()
                )));
            }
            counts[config.index()] += 1;
        }
        Self::from_counts(counts)
    }

    /// Parse a CSV document with header `f1,f2,f3,f4[,count]` and one data row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty frequency CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_ascii_lowercase())
            .collect();
        let with_count = match header.as_slice() {
            [a, b, c, d] if [a, b, c, d] == [&"f1", &"f2", &"f3", &"f4"] => false,
            [a, b, c, d, e]
                if [a, b, c, d] == [&"f1", &"f2", &"f3", &"f4"] && e == "count" =>
            {
                true
            }
            _ => {
                return Err(Error::Parse(format!(
                    "expected header f1,f2,f3,f4[,count], got {header:?}"
                )))
            }
        };
        let row = lines
            .next()
            .ok_or_else(|| Error::Parse("missing data row".into()))?;
        if lines.next().is_some() {
            return Err(Error::Parse("expected exactly one data row".into()));
        }
        let cols: Vec<&str> = row.split(',').map(str::trim).collect();
        if cols.len() != header.len() {
            return Err(Error::Parse(format!(
                "row has {} columns, header has {}",
                cols.len(),
                header.len()
            )));
        }
        let mut f = [0.0f64; 4];
        for (i, slot) in f.iter_mut().enumerate() {
            *slot = cols[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("column f{}: {e}", i + 1)))?;
        }
        let count = if with_count {
            Some(
                cols[4]
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("column count: {e}")))?,
            )
        } else {
            None
        };
        Self::new(f, count)
    }

    pub fn frequencies(&self) -> [f64; 4] {
        self.f
    }

    pub fn count(&self) -> Option<u64> {
        self.count
    }

    /// Add-half smoothing fᵢ → (count·fᵢ + ½)/(count + 2), an extension for
    /// tables with empirical zeros; requires a known sample count.
    pub fn smoothed(&self) -> Result<Self> {
        let count = self.count.ok_or_else(|| {
            Error::InvalidParams("smoothing needs the sample count".into())
        })? as f64;
        let mut f = self.f.map(|v| (count * v + 0.5) / (count + 2.0));
        // Guard the normalization against rounding.
        let sum: f64 = f.iter().sum();
        f.iter_mut().for_each(|v| *v /= sum);
        Self::new(f, self.count)
    }
}

/// (Ŝ₁, Ŝ₂, Ŝ₁₂) from a table.
pub fn spin_averages(table: &FrequencyTable) -> (f64, f64, f64) {
    let [f1, f2, f3, f4] = table.f;
    (
        f1 + f2 - f3 - f4,
        f1 - f2 + f3 - f4,
        f1 - f2 - f3 + f4,
    )
}

/// Result of the log-ratio extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedModel {
    pub lambda: [f64; 3],
    pub beta: f64,
    pub h1_hat: f64,
    pub h2_hat: f64,
    pub j_hat: f64,
}

fn two_spin_params(problem: &IsingProblem) -> Result<(f64, f64, f64)> {
    if problem.n() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: problem.n(),
        });
    }
    let j = problem
        .couplings()
        .iter()
        .find(|&&(a, b, _)| (a, b) == (0, 1))
        .map(|&(_, _, v)| v)
        .unwrap_or(0.0);
    Ok((problem.fields()[0], problem.fields()[1], j))
}

/// Closed-form Lagrange multipliers from the frequencies.
pub fn multipliers(table: &FrequencyTable) -> Result<[f64; 3]> {
    let f = table.f;
    if let Some(i) = f.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroFrequency { index: i });
    }
    Ok([
        0.25 * ((f[2] * f[3]) / (f[0] * f[1])).ln(),
        0.25 * ((f[1] * f[3]) / (f[0] * f[2])).ln(),
        0.25 * ((f[1] * f[2]) / (f[0] * f[3])).ln(),
    ])
}

/// Log-ratio extraction of (λ, β, ĥ₁, ĥ₂, Ĵ) against the programmed problem.
pub fn extract_model(table: &FrequencyTable, problem: &IsingProblem) -> Result<ExtractedModel> {
    let (h1, h2, j) = two_spin_params(problem)?;
    let lambda = multipliers(table)?;
    let norm2: f64 = lambda.iter().map(|l| l * l).sum();
    let denom = h1 * lambda[0] + h2 * lambda[1] + j * lambda[2];
    if norm2 < 1e-24 || denom.abs() < 1e-300 {
        return Err(Error::NonIdentifiable(
            "multipliers carry no projection onto the programmed parameters".into(),
        ));
    }
    let beta = norm2 / denom;
    Ok(ExtractedModel {
        lambda,
        beta,
        h1_hat: lambda[0] / beta,
        h2_hat: lambda[1] / beta,
        j_hat: lambda[2] / beta,
    })
}

/// Gibbs mean energy over the four configurations, stable for either sign
/// of β.
fn gibbs_mean_energy(energies: &[f64; 4], beta: f64) -> f64 {
    let shift = energies
        .iter()
        .map(|&e| beta * e)
        .fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut num = 0.0;
    for &e in energies {
        let w = (-(beta * e - shift)).exp();
        z += w;
        num += w * e;
    }
    num / z
}

/// Mean-energy extraction: the β whose Gibbs distribution over the
/// programmed energies reproduces the empirical mean energy.
pub fn extract_beta_energy(table: &FrequencyTable, problem: &IsingProblem) -> Result<f64> {
    let (h1, h2, j) = two_spin_params(problem)?;
    let (s1, s2, s12) = spin_averages(table);
    let e_emp = h1 * s1 + h2 * s2 + j * s12;

    let energies: [f64; 4] = std::array::from_fn(|k| problem.energy_of_index(k));
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let e_max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if e_max - e_min < 1e-15 {
        return Err(Error::NonIdentifiable(
            "all configuration energies coincide".into(),
        ));
    }
    if !(e_emp > e_min && e_emp < e_max) {
        return Err(Error::NoSolution(format!(
            "empirical mean energy {e_emp} outside the open interval ({e_min}, {e_max})"
        )));
    }

    // ⟨E⟩(β) is strictly decreasing; expand a bracket, then bisect.
    let g = |beta: f64| gibbs_mean_energy(&energies, beta) - e_emp;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..80 {
        if g(lo) > 0.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..80 {
        if g(hi) < 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(Error::NoSolution(format!(
            "failed to bracket the mean-energy equation for ⟨E⟩ = {e_emp}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which extractor a bootstrap resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMethod {
    LogRatio,
    MeanEnergy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub resamples: usize,
    pub failures: usize,
}

/// Multinomial bootstrap of the extracted β. Resamples the observed counts,
/// re-runs the chosen extractor, and reports mean and standard deviation
/// over the successful resamples.
pub fn bootstrap_beta(
    table: &FrequencyTable,
    problem: &IsingProblem,
    method: BetaMethod,
    resamples: usize,
    rng: &mut impl Rng,
) -> Result<BootstrapSummary> {
    let count = table
        .count
        .ok_or_else(|| Error::InvalidParams("bootstrap needs the sample count".into()))?;
    if resamples == 0 {
        return Err(Error::InvalidParams("need at least one resample".into()));
    }
    let mut values = Vec::with_capacity(resamples);
    let mut failures = 0usize;
    for _ in 0..resamples {
        let counts = multinomial_draw(count, &table.f, rng);
        let resampled = FrequencyTable::from_counts(counts)?;
        let beta = match method {
            BetaMethod::LogRatio => extract_model(&resampled, problem).map(|m| m.beta),
            BetaMethod::MeanEnergy => extract_beta_energy(&resampled, problem),
        };
        match beta {
            Ok(b) => values.push(b),
            Err(_) => failures += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::NonIdentifiable(
            "every bootstrap resample failed to extract".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(BootstrapSummary {
        mean,
        std_dev: var.sqrt(),
        resamples: values.len(),
        failures,
    })
}

/// Draw multinomial counts by chained binomials.
pub fn multinomial_draw(total: u64, p: &[f64; 4], rng: &mut impl Rng) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut remaining = total;
    let mut mass = 1.0f64;
    for i in 0..3 {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let q = (p[i] / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
        counts[i] = draw;
        remaining -= draw;
        mass -= p[i];
    }
    counts[3] = remaining;
    counts
}
