//! Ising problem instances, basis indexing, the fast-anneal embedding, and
//! the spin-reversal gauge transform.
//!
//! A problem is the diagonal Hamiltonian
//!
//! ```text
//! H_P = Σᵢ hᵢ σᵢᶻ + Σ_{i>j} J_ij σᵢᶻ σⱼᶻ,
//! ```
//!
//! with dimensionless fields and couplings in device program units.
//!
//! # Index convention
//!
//! A configuration of n spins S₁…S_n ∈ {+1, −1} maps to the basis index
//!
//! ```text
//! index = Σ_k (1 − S_{k+1})/2 · 2^(n−1−k),      k = 0…n−1,
//! ```
//!
//! i.e. spin 1 is the most significant bit and ↑ (S = +1) is bit value 0.
//! For one spin this is index = (1 − S₁)/2; for two spins the order is
//! (↑↑, ↑↓, ↓↑, ↓↓) ↔ (0, 1, 2, 3).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Largest supported system; state vectors are dense.
pub const MAX_QUBITS: usize = 24;

/// Default sanity bound on |hᵢ| (device program range).
pub const DEFAULT_FIELD_BOUND: f64 = 4.0;
/// Default sanity bound on |J_ij|.
pub const DEFAULT_COUPLING_BOUND: f64 = 2.0;

/// An Ising problem instance: local fields plus pair couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    h: Vec<f64>,
    /// Canonicalized couplings (a, b, J) with a < b, sorted, unique.
    couplings: Vec<(usize, usize, f64)>,
}

impl IsingProblem {
    pub fn new(h: Vec<f64>, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::with_bounds(h, couplings, DEFAULT_FIELD_BOUND, DEFAULT_COUPLING_BOUND)
    }

    /// Construct with explicit range bounds instead of the device defaults.
    pub fn with_bounds(
        h: Vec<f64>,
        couplings: Vec<(usize, usize, f64)>,
        field_bound: f64,
        coupling_bound: f64,
    ) -> Result<Self> {
        let n = h.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidProblem(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        for (i, &hi) in h.iter().enumerate() {
            if !hi.is_finite() || hi.abs() > field_bound {
                return Err(Error::InvalidProblem(format!(
                    "field h[{i}] = {hi} outside ±{field_bound}"
                )));
            }
        }
        let mut canon: Vec<(usize, usize, f64)> = Vec::with_capacity(couplings.len());
        for &(i, j, v) in &couplings {
            if i == j {
                return Err(Error::InvalidProblem(format!("self-coupling on qubit {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidProblem(format!(
                    "coupling ({i}, {j}) outside 0..{n}"
                )));
            }
            if !v.is_finite() || v.abs() > coupling_bound {
                return Err(Error::InvalidProblem(format!(
                    "coupling J[{i},{j}] = {v} outside ±{coupling_bound}"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            canon.push((a, b, v));
        }
        canon.sort_by_key(|&(a, b, _)| (a, b));
        if canon.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidProblem("duplicate coupling pair".into()));
        }
        Ok(Self { n, h, couplings: canon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    /// Canonicalized couplings (a, b, J) with a < b.
    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn max_abs_field(&self) -> f64 {
        self.h.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// H_P evaluated on an explicit spin configuration.
    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: config.n(),
            });
        }
        Ok(self.energy_of_index(config.index()))
    }

    /// H_P evaluated on the configuration with the given basis index.
    pub fn energy_of_index(&self, index: usize) -> f64 {
        let spin = |site: usize| -> f64 {
            if (index >> (self.n - 1 - site)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut e = 0.0;
        for (i, &hi) in self.h.iter().enumerate() {
            e += hi * spin(i);
        }
        for &(a, b, j) in &self.couplings {
            e += j * spin(a) * spin(b);
        }
        e
    }

    /// Energies of all 2^n configurations, in index order.
    pub fn all_energies(&self) -> Vec<f64> {
        (0..1usize << self.n).map(|k| self.energy_of_index(k)).collect()
    }

    /// Flip the sign of selected fields, and of every coupling with exactly
    /// one endpoint flipped. The spectrum is preserved under the relabeling
    /// S_i → −S_i on flipped sites (see [`gauge_relabel_index`]).
    pub fn spin_reversal_transform(&self, flips: &[bool]) -> Result<IsingProblem> {
        if flips.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: flips.len(),
            });
        }
        let h = self
            .h
            .iter()
            .zip(flips)
            .map(|(&hi, &f)| if f { -hi } else { hi })
            .collect();
        let couplings = self
            .couplings
            .iter()
            .map(|&(a, b, j)| (a, b, if flips[a] != flips[b] { -j } else { j }))
            .collect();
        Ok(Self {
            n: self.n,
            h,
            couplings,
        })
    }

    /// Ferromagnetic open chain of length `n` with uniform nearest-neighbour
    /// coupling `j` and no fields.
    pub fn chain(n: usize, j: f64) -> Result<Self> {
        let couplings = (0..n.saturating_sub(1)).map(|i| (i, i + 1, j)).collect();
        Self::new(vec![0.0; n], couplings)
    }

    /// Single spin in a longitudinal field.
    pub fn one_spin(h1: f64) -> Self {
        Self::new(vec![h1], vec![]).expect("one-spin problem in range")
    }

    /// Two spins with fields (h1, h2) and coupling j.
    pub fn two_spin(h1: f64, h2: f64, j: f64) -> Result<Self> {
        Self::new(vec![h1, h2], vec![(0, 1, j)])
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_problem()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = ProblemFile {
            n: self.n,
            h: self.h.clone(),
            j: self.couplings.clone(),
        };
        serde_json::to_string_pretty(&file).expect("problem serializes")
    }
}

/// On-disk problem document: `{"n": 2, "h": [...], "j": [[i, j, value], ...]}`
/// with zero-based qubit indices.
#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    n: usize,
    h: Vec<f64>,
    #[serde(default)]
    j: Vec<(usize, usize, f64)>,
}

impl ProblemFile {
    fn into_problem(self) -> Result<IsingProblem> {
        if self.h.len() != self.n {
            return Err(Error::InvalidProblem(format!(
                "field array length {} does not match n = {}",
                self.h.len(),
                self.n
            )));
        }
        IsingProblem::new(self.h, self.j)
    }
}

/// Bundled two-spin benchmark instances.
pub mod instances {
    use super::IsingProblem;

    /// h = (−1, −1), J = 0.95.
    pub fn s2_1() -> IsingProblem {
        IsingProblem::two_spin(-1.0, -1.0, 0.95).unwrap()
    }

    /// h = (−1, −1), J = 1.00; three degenerate ground states.
    pub fn s2_2() -> IsingProblem {
        IsingProblem::two_spin(-1.0, -1.0, 1.0).unwrap()
    }

    /// h = (−0.95, −0.95), J = 1.00.
    pub fn s2_3() -> IsingProblem {
        IsingProblem::two_spin(-0.95, -0.95, 1.0).unwrap()
    }

    /// h = (−0.07, 0.05), J = 0.10; the weak-parameter extraction benchmark.
    pub fn s2_4() -> IsingProblem {
        IsingProblem::two_spin(-0.07, 0.05, 0.1).unwrap()
    }

    pub fn by_name(name: &str) -> Option<IsingProblem> {
        match name.to_ascii_lowercase().as_str() {
            "2s1" => Some(s2_1()),
            "2s2" => Some(s2_2()),
            "2s3" => Some(s2_3()),
            "2s4" => Some(s2_4()),
            _ => None,
        }
    }
}

/// A definite spin configuration S₁…S_n with its basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() || spins.len() > MAX_QUBITS {
            return Err(Error::InvalidProblem(format!(
                "configuration size {} outside 1..={MAX_QUBITS}",
                spins.len()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidProblem("spins must be ±1".into()));
        }
        Ok(Self { spins })
    }

    /// Parse a string of `+`/`-` (or `u`/`d`) tokens, spin 1 first.
    pub fn parse(text: &str) -> Result<Self> {
        let spins: Result<Vec<i8>> = text
            .trim()
            .chars()
            .map(|c| match c {
                '+' | 'u' | 'U' => Ok(1),
                '-' | 'd' | 'D' => Ok(-1),
                _ => Err(Error::Parse(format!("bad spin token {c:?}"))),
            })
            .collect();
        Self::new(spins?)
    }

    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidProblem(format!("n = {n} outside 1..={MAX_QUBITS}")));
        }
        if index >= 1usize << n {
            return Err(Error::InvalidProblem(format!(
                "index {index} outside 0..{}",
                1usize << n
            )));
        }
        let spins = (0..n)
            .map(|k| if (index >> (n - 1 - k)) & 1 == 0 { 1 } else { -1 })
            .collect();
        Ok(Self { spins })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn index(&self) -> usize {
        self.spins.iter().fold(0usize, |acc, &s| {
            (acc << 1) | usize::from(s < 0)
        })
    }
}

/// Basis index of a configuration after flipping the selected sites.
pub fn gauge_relabel_index(n: usize, index: usize, flips: &[bool]) -> usize {
    let mask = flips
        .iter()
        .enumerate()
        .fold(0usize, |m, (k, &f)| if f { m | 1 << (n - 1 - k) } else { m });
    index ^ mask
}

/// A problem rewritten for the fast-anneal protocol, which forbids nonzero
/// fields: every qubit with hᵢ ≠ 0 gains an auxiliary partner qubit, coupled
/// with J = hᵢ and pinned to S = +1 by a constant flux-bias term −h_FB·σᶻ.
///
/// With the auxiliary spins aligned, the coupling reproduces the original
/// field term, so the ground-state marginal on the original qubits equals the
/// ground state of the original problem.
#[derive(Debug, Clone)]
pub struct EmbeddedProblem {
    original: IsingProblem,
    embedded: IsingProblem,
    /// (original qubit, auxiliary qubit) pairs, in original-qubit order.
    auxiliary: Vec<(usize, usize)>,
    h_fb: f64,
}

impl EmbeddedProblem {
    pub fn original(&self) -> &IsingProblem {
        &self.original
    }

    /// The field-free problem on n + k qubits actually annealed.
    pub fn embedded(&self) -> &IsingProblem {
        &self.embedded
    }

    pub fn auxiliary_map(&self) -> &[(usize, usize)] {
        &self.auxiliary
    }

    /// Flux-bias magnitude in rad/ns; the Hamiltonian term is −h_FB σᶻ on
    /// each auxiliary qubit.
    pub fn flux_bias(&self) -> f64 {
        self.h_fb
    }

    /// Per-qubit constant σᶻ coefficients (rad/ns) of the embedded anneal.
    pub fn bias_terms(&self) -> Vec<f64> {
        let mut bias = vec![0.0; self.embedded.n()];
        for &(_, aux) in &self.auxiliary {
            bias[aux] = -self.h_fb;
        }
        bias
    }

    /// Sum reduced populations of the embedded register down to the original
    /// qubits (trace over auxiliaries).
    pub fn marginal_populations(&self, embedded_p: &[f64]) -> Result<Vec<f64>> {
        let n = self.original.n();
        let n_emb = self.embedded.n();
        if embedded_p.len() != 1 << n_emb {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_emb,
                got: embedded_p.len(),
            });
        }
        let mut out = vec![0.0; 1 << n];
        for (k, &w) in embedded_p.iter().enumerate() {
            let orig = k >> (n_emb - n); // original qubits are the high bits
            out[orig] += w;
        }
        Ok(out)
    }
}

/// Lower bound that a valid flux bias must strictly exceed:
/// π·max_s max(A(s), B(s)·max|hᵢ|) in rad/ns.
pub fn flux_bias_threshold(problem: &IsingProblem, schedule: &Schedule) -> f64 {
    let hmax = problem.max_abs_field();
    let mut m: f64 = 0.0;
    const SAMPLES: usize = 2000;
    for k in 0..=SAMPLES {
        let s = k as f64 / SAMPLES as f64;
        let a = schedule.eval_a(s).unwrap_or(0.0);
        let b = schedule.eval_b(s).unwrap_or(0.0);
        m = m.max(a.max(b * hmax));
    }
    std::f64::consts::PI * m
}

/// Default flux bias: 100 × the threshold of [`flux_bias_threshold`].
pub fn default_flux_bias(problem: &IsingProblem, schedule: &Schedule) -> f64 {
    100.0 * flux_bias_threshold(problem, schedule)
}

/// Build the fast-anneal embedding of `problem`. Auxiliary qubits are
/// appended after the original register in original-qubit order.
pub fn embed_fast_anneal(
    problem: &IsingProblem,
    schedule: &Schedule,
    h_fb: f64,
) -> Result<EmbeddedProblem> {
    let n = problem.n();
    let with_field: Vec<usize> = (0..n).filter(|&i| problem.fields()[i] != 0.0).collect();

    if !with_field.is_empty() {
        let required = flux_bias_threshold(problem, schedule);
        if !(h_fb > required) {
            return Err(Error::FluxBiasTooSmall { required, got: h_fb });
        }
    }

    let n_emb = n + with_field.len();
    if n_emb > MAX_QUBITS {
        return Err(Error::InvalidProblem(format!(
            "embedded problem needs {n_emb} qubits (max {MAX_QUBITS})"
        )));
    }

    let mut couplings: Vec<(usize, usize, f64)> = problem.couplings().to_vec();
    let mut auxiliary = Vec::with_capacity(with_field.len());
    for (rank, &orig) in with_field.iter().enumerate() {
        let aux = n + rank;
        couplings.push((orig, aux, problem.fields()[orig]));
        auxiliary.push((orig, aux));
    }

    let bound = DEFAULT_FIELD_BOUND.max(DEFAULT_COUPLING_BOUND);
    let embedded = IsingProblem::with_bounds(vec![0.0; n_emb], couplings, bound, bound)?;

    Ok(EmbeddedProblem {
        original: problem.clone(),
        embedded,
        auxiliary,
        h_fb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiset(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn index_convention_matches_stated_rule() {
        // One spin: index = (1 − S₁)/2.
        assert_eq!(SpinConfiguration::new(vec![1]).unwrap().index(), 0);
        assert_eq!(SpinConfiguration::new(vec![-1]).unwrap().index(), 1);
        // Two spins: (↑↑, ↑↓, ↓↑, ↓↓) ↔ (0, 1, 2, 3).
        assert_eq!(SpinConfiguration::new(vec![1, 1]).unwrap().index(), 0);
        assert_eq!(SpinConfiguration::new(vec![1, -1]).unwrap().index(), 1);
        assert_eq!(SpinConfiguration::new(vec![-1, 1]).unwrap().index(), 2);
        assert_eq!(SpinConfiguration::new(vec![-1, -1]).unwrap().index(), 3);
    }

    #[test]
    fn index_round_trips() {
        for n in 1..=5 {
            for idx in 0..1usize << n {
                let c = SpinConfiguration::from_index(n, idx).unwrap();
                assert_eq!(c.index(), idx);
            }
        }
    }

    #[test]
    fn parses_spin_strings() {
        let c = SpinConfiguration::parse("+-").unwrap();
        assert_eq!(c.spins(), &[1, -1]);
        assert_eq!(c.index(), 1);
        assert!(SpinConfiguration::parse("+?").is_err());
    }

    #[test]
    fn energy_of_benchmark_instances() {
        // 2S1 on (↑↑): −1 − 1 + 0.95 = −1.05.
        let p = instances::s2_1();
        let up_up = SpinConfiguration::new(vec![1, 1]).unwrap();
        assert!((p.energy(&up_up).unwrap() - (-1.05)).abs() < 1e-12);

        // 2S3 on (↑↓): −0.95 + 0.95 − 1 = −1.00, degenerate with (↓↑).
        let p3 = instances::s2_3();
        let ud = SpinConfiguration::new(vec![1, -1]).unwrap();
        let du = SpinConfiguration::new(vec![-1, 1]).unwrap();
        assert!((p3.energy(&ud).unwrap() - (-1.0)).abs() < 1e-12);
        assert!((p3.energy(&du).unwrap() - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_hamiltonian_has_zero_energy() {
        let p = IsingProblem::new(vec![0.0, 0.0, 0.0], vec![]).unwrap();
        for k in 0..8 {
            assert_eq!(p.energy_of_index(k), 0.0);
        }
    }

    #[test]
    fn energy_dimension_mismatch_is_an_error() {
        let p = instances::s2_1();
        let c = SpinConfiguration::new(vec![1]).unwrap();
        assert!(p.energy(&c).is_err());
    }

    #[test]
    fn validation_rejects_bad_problems() {
        assert!(IsingProblem::new(vec![5.0], vec![]).is_err());
        assert!(IsingProblem::new(vec![0.0; 2], vec![(0, 0, 1.0)]).is_err());
        assert!(IsingProblem::new(vec![0.0; 2], vec![(0, 1, 3.0)]).is_err());
        assert!(IsingProblem::new(vec![0.0; 2], vec![(0, 1, 1.0), (1, 0, 0.5)]).is_err());
        assert!(IsingProblem::new(vec![], vec![]).is_err());
    }

    #[test]
    fn gauge_transform_examples() {
        // Flipping both spins of 2S1 flips the fields and keeps J.
        let p = instances::s2_1();
        let q = p.spin_reversal_transform(&[true, true]).unwrap();
        assert_eq!(q.fields(), &[1.0, 1.0]);
        assert_eq!(q.couplings()[0].2, 0.95);
        let dd = SpinConfiguration::new(vec![-1, -1]).unwrap();
        assert!((q.energy(&dd).unwrap() - (-1.05)).abs() < 1e-12);

        // Identity gauge.
        let r = p.spin_reversal_transform(&[false, false]).unwrap();
        assert_eq!(r, p);

        // Single flip negates the coupling.
        let p2 = instances::s2_2();
        let s = p2.spin_reversal_transform(&[true, false]).unwrap();
        assert_eq!(s.fields(), &[1.0, -1.0]);
        assert_eq!(s.couplings()[0].2, -1.0);
        assert_eq!(
            multiset(s.all_energies()),
            multiset(p2.all_energies()),
        );
    }

    #[test]
    fn gauge_invariance_of_spectrum_random_problems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=8);
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut couplings = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.5) {
                        couplings.push((a, b, rng.gen_range(-1.5..1.5)));
                    }
                }
            }
            let p = IsingProblem::new(h, couplings).unwrap();
            let flips: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let q = p.spin_reversal_transform(&flips).unwrap();

            // The spectrum is a permutation of the original, and the
            // relabeling maps energies pointwise.
            let ep = p.all_energies();
            let eq = q.all_energies();
            assert_eq!(multiset(ep.clone()), multiset(eq.clone()));
            for k in 0..1usize << n {
                let k2 = gauge_relabel_index(n, k, &flips);
                assert!((ep[k] - eq[k2]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let sched = Schedule::fast();

        // One spin, h = 0.25 → two qubits coupled with J = 0.25.
        let p = IsingProblem::one_spin(0.25);
        let h_fb = default_flux_bias(&p, &sched);
        let e = embed_fast_anneal(&p, &sched, h_fb).unwrap();
        assert_eq!(e.embedded().n(), 2);
        assert_eq!(e.embedded().fields(), &[0.0, 0.0]);
        assert_eq!(e.embedded().couplings(), &[(0, 1, 0.25)]);
        assert_eq!(e.auxiliary_map(), &[(0, 1)]);
        assert_eq!(e.bias_terms(), vec![0.0, -h_fb]);

        // Two spins (h₁, h₂, J) → four qubits with J₁₃ = h₁, J₂₄ = h₂.
        let p2 = IsingProblem::two_spin(0.3, -0.2, 0.5).unwrap();
        let e2 = embed_fast_anneal(&p2, &sched, default_flux_bias(&p2, &sched)).unwrap();
        assert_eq!(e2.embedded().n(), 4);
        assert_eq!(
            e2.embedded().couplings(),
            &[(0, 1, 0.5), (0, 2, 0.3), (1, 3, -0.2)]
        );

        // No fields → identity embedding.
        let p3 = IsingProblem::chain(3, -0.1).unwrap();
        let e3 = embed_fast_anneal(&p3, &sched, 0.0).unwrap();
        assert_eq!(e3.embedded().n(), 3);
        assert!(e3.auxiliary_map().is_empty());
    }

    #[test]
    fn embedding_rejects_small_flux_bias() {
        let sched = Schedule::fast();
        let p = IsingProblem::one_spin(0.25);
        let err = embed_fast_anneal(&p, &sched, 1.0);
        assert!(matches!(err, Err(Error::FluxBiasTooSmall { .. })));
    }

    #[test]
    fn embedded_ground_state_marginal_matches_original() {
        let sched = Schedule::fast();
        for (h1, h2, j) in [(0.25, 0.0, 0.0), (0.3, -0.4, 0.5), (-0.2, 0.1, -0.3)] {
            let p = IsingProblem::two_spin(h1, h2, j).unwrap();
            let e = embed_fast_anneal(&p, &sched, default_flux_bias(&p, &sched)).unwrap();
            let emb = e.embedded();
            let n = p.n();
            let n_emb = emb.n();

            // Among embedded configurations with every auxiliary aligned to
            // S = +1, the minimizer restricted to the original register must
            // be the original argmin.
            let aligned_min = (0..1usize << n_emb)
                .filter(|&k| {
                    e.auxiliary_map()
                        .iter()
                        .all(|&(_, aux)| (k >> (n_emb - 1 - aux)) & 1 == 0)
                })
                .min_by(|&a, &b| {
                    emb.energy_of_index(a)
                        .partial_cmp(&emb.energy_of_index(b))
                        .unwrap()
                })
                .unwrap();
            let orig_min = (0..1usize << n)
                .min_by(|&a, &b| {
                    p.energy_of_index(a)
                        .partial_cmp(&p.energy_of_index(b))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(aligned_min >> (n_emb - n), orig_min);
        }
    }

    #[test]
    fn problem_files_round_trip_and_validate() {
        let p = instances::s2_4();
        let text = p.to_json_string();
        let q = IsingProblem::from_json_str(&text).unwrap();
        assert_eq!(p, q);

        assert!(IsingProblem::from_json_str(r#"{"n": 2, "h": [0.1], "j": []}"#).is_err());
        assert!(
            IsingProblem::from_json_str(r#"{"n": 2, "h": [0.1, 0.2], "j": [[0, 0, 1.0]]}"#)
                .is_err()
        );
    }
}
