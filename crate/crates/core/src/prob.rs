//! Probability vectors over computational basis states.

use crate::error::{Error, Result};
use crate::problems::IsingProblem;

/// Nonnegative weights over the 2^n basis states, summing to one.
///
/// Entries follow the crate-wide index convention (spin 1 = most significant
/// bit). Tiny negative entries produced by integrators are clamped to zero at
/// construction; the sum is required to be 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    /// Tolerance below zero that is treated as integrator noise.
    const NEG_TOL: f64 = 1e-9;
    /// Allowed deviation of the sum from one.
    const SUM_TOL: f64 = 1e-9;

    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParams("empty probability vector".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("p[{i}] = {v} is not finite")));
            }
            if v < -Self::NEG_TOL {
                return Err(Error::InvalidParams(format!("p[{i}] = {v} is negative")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        let p = p.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self { p })
    }

    /// Uniform distribution over `len` states.
    pub fn uniform(len: usize) -> Self {
        Self {
            p: vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.p[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.p.iter().copied()
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Gibbs-style average of the problem energy under these weights.
    pub fn mean_energy(&self, problem: &IsingProblem) -> Result<f64> {
        let dim = 1usize << problem.n();
        if dim != self.p.len() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.p.len(),
            });
        }
        Ok(self
            .p
            .iter()
            .enumerate()
            .map(|(k, &w)| w * problem.energy_of_index(k))
            .sum())
    }

    /// Largest absolute difference to another vector of the same length.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.p.len(), other.p.len());
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(v: ProbabilityVector) -> Self {
        v.p
    }
}
