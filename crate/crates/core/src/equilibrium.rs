//! Equilibrium predictions: Gibbs probabilities, the open-chain mean energy,
//! and inverse-temperature fitting.
//!
//! Probabilities follow p_i ∝ g_i·e^{−β·E_i} with dimensionless problem
//! energies and the dimensionless inverse temperature β = C/T, where
//! C = h·B(1)/(2·k_B)·10⁹ = 0.206 K converts to kelvin for the standard
//! schedule's endpoint.

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::problems::IsingProblem;

/// Conversion constant C in kelvin: β = C / T.
pub const TEMPERATURE_SCALE_K: f64 = 0.206;

/// Largest β accepted by the stabilized Gibbs evaluation.
pub const MAX_BETA: f64 = 1e4;

/// Exhaustive enumeration limit for Gibbs sums.
const MAX_GIBBS_QUBITS: usize = 20;

pub fn beta_from_temperature_k(t_kelvin: f64) -> f64 {
    TEMPERATURE_SCALE_K / t_kelvin
}

pub fn beta_from_temperature_mk(t_millikelvin: f64) -> f64 {
    beta_from_temperature_k(t_millikelvin * 1e-3)
}

pub fn temperature_k_from_beta(beta: f64) -> f64 {
    TEMPERATURE_SCALE_K / beta
}

pub fn temperature_mk_from_beta(beta: f64) -> f64 {
    1e3 * temperature_k_from_beta(beta)
}

/// Per-configuration Gibbs probabilities of a problem at inverse
/// temperature β (degeneracies handled implicitly by enumeration).
///
/// Stabilized by a ground-energy shift, so β up to [`MAX_BETA`] is safe.
pub fn gibbs_probabilities(problem: &IsingProblem, beta: f64) -> Result<ProbabilityVector> {
    if !(0.0..=MAX_BETA).contains(&beta) {
        return Err(Error::InvalidParams(format!(
            "beta = {beta} outside [0, {MAX_BETA}]"
        )));
    }
    if problem.n() > MAX_GIBBS_QUBITS {
        return Err(Error::InvalidProblem(format!(
            "exhaustive Gibbs enumeration limited to {MAX_GIBBS_QUBITS} qubits"
        )));
    }
    let energies = problem.all_energies();
    Ok(gibbs_from_energies(&energies, beta))
}

/// Gibbs weights for an explicit energy list (ground-energy shifted).
pub fn gibbs_from_energies(energies: &[f64], beta: f64) -> ProbabilityVector {
    let e_min = energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    ProbabilityVector::new(weights.into_iter().map(|w| w / z).collect())
        .expect("shifted Gibbs weights normalize")
}

/// The level spectrum (energy, degeneracy) of a problem, grouping
/// configurations whose energies agree within `tol`.
pub fn level_spectrum(problem: &IsingProblem, tol: f64) -> Vec<(f64, usize)> {
    let mut energies = problem.all_energies();
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for e in energies {
        match levels.last_mut() {
            Some((e0, g)) if (e - *e0).abs() <= tol => *g += 1,
            _ => levels.push((e, 1)),
        }
    }
    levels
}

/// Mean Gibbs energy of the open ferromagnetic chain of `n` spins with
/// uniform coupling `j`: ⟨E⟩ = −J·(N−1)·tanh(β·J).
pub fn chain_mean_energy(n: usize, j: f64, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("chain length {n} < 2")));
    }
    Ok(-j * (n as f64 - 1.0) * (beta * j).tanh())
}

/// One empirical observation for [`fit_beta`].
#[derive(Debug, Clone)]
pub enum Observation {
    /// Observed per-configuration probabilities of a problem.
    Probabilities {
        problem: IsingProblem,
        observed: ProbabilityVector,
    },
    /// Observed mean energy of an open chain.
    ChainMeanEnergy { n: usize, coupling: f64, observed: f64 },
}

impl Observation {
    fn squared_residual(&self, beta: f64) -> Result<f64> {
        Ok(match self {
            Observation::Probabilities { problem, observed } => {
                let model = gibbs_probabilities(problem, beta)?;
                if model.len() != observed.len() {
                    return Err(Error::DimensionMismatch {
                        expected: model.len(),
                        got: observed.len(),
                    });
                }
                model
                    .iter()
                    .zip(observed.iter())
                    .map(|(m, o)| (m - o) * (m - o))
                    .sum()
            }
            Observation::ChainMeanEnergy { n, coupling, observed } => {
                let model = chain_mean_energy(*n, *coupling, beta)?;
                (model - observed) * (model - observed)
            }
        })
    }
}

/// Least-squares fit of β to a set of observations, by scalar minimization
/// of the summed squared residuals over [0, [`MAX_BETA`]].
///
/// Fails when the residual is flat in β (non-identifiable data, e.g. uniform
/// probabilities).
pub fn fit_beta(observations: &[Observation]) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::InvalidParams("no observations".into()));
    }
    let loss = |beta: f64| -> Result<f64> {
        observations.iter().try_fold(0.0, |acc, o| Ok(acc + o.squared_residual(beta)?))
    };

    // Coarse bracket: zero plus a log-spaced grid.
    let mut grid = vec![0.0];
    const POINTS: usize = 240;
    for k in 0..=POINTS {
        let exp = -4.0 + 8.0 * k as f64 / POINTS as f64;
        grid.push(10f64.powf(exp));
    }
    let mut best = 0usize;
    let mut best_loss = f64::INFINITY;
    let mut lo_loss = f64::INFINITY;
    let mut hi_loss = -f64::INFINITY;
    let mut losses = Vec::with_capacity(grid.len());
    for (i, &b) in grid.iter().enumerate() {
        let l = loss(b)?;
        losses.push(l);
        if l < best_loss {
            best_loss = l;
            best = i;
        }
        lo_loss = lo_loss.min(l);
        hi_loss = hi_loss.max(l);
    }
    if hi_loss - lo_loss <= 1e-20 * (1.0 + hi_loss) {
        return Err(Error::NonIdentifiable(
            "residual is independent of beta".into(),
        ));
    }

    let mut a = if best == 0 { 0.0 } else { grid[best - 1] };
    let mut b = if best + 1 < grid.len() { grid[best + 1] } else { MAX_BETA };

    // Golden-section refinement to relative tolerance 1e-10.
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = loss(x1)?;
    let mut f2 = loss(x2)?;
    for _ in 0..200 {
        if b - a <= 1e-10 * (1.0 + a.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = loss(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = loss(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::instances;

    /// Direct Boltzmann sum, written independently of the library path.
    fn brute_force_mean_energy(problem: &IsingProblem, beta: f64) -> f64 {
        let energies = problem.all_energies();
        let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        let mut num = 0.0;
        for &e in &energies {
            let w = (-beta * (e - e0)).exp();
            z += w;
            num += w * e;
        }
        num / z
    }

    #[test]
    fn reproduces_published_two_spin_probabilities() {
        let beta = 6.93;
        let p1 = gibbs_probabilities(&instances::s2_1(), beta).unwrap();
        for (got, want) in p1.iter().zip([0.50, 0.25, 0.25, 0.0]) {
            assert!((got - want).abs() < 0.005, "2S1: {got} vs {want}");
        }

        let p2 = gibbs_probabilities(&instances::s2_2(), beta).unwrap();
        for (got, want) in p2.iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!((got - want).abs() < 0.005, "2S2: {got} vs {want}");
        }

        let p3 = gibbs_probabilities(&instances::s2_3(), beta).unwrap();
        for (got, want) in p3.iter().zip([0.20, 0.40, 0.40, 0.0]) {
            assert!((got - want).abs() < 0.005, "2S3: {got} vs {want}");
        }
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let p = gibbs_probabilities(&instances::s2_1(), 0.0).unwrap();
        for v in p.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_and_stability_at_large_beta() {
        for beta in [1.0, 100.0, 1e4] {
            let p = gibbs_probabilities(&instances::s2_3(), beta).unwrap();
            assert!((p.sum() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn level_grouping_is_consistent_with_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(1..=8);
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut couplings = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.4) {
                        couplings.push((a, b, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            let p = IsingProblem::new(h, couplings).unwrap();
            let beta = rng.gen_range(0.1..5.0);
            let per_config = gibbs_probabilities(&p, beta).unwrap();

            let levels = level_spectrum(&p, 1e-12);
            assert_eq!(levels.iter().map(|&(_, g)| g).sum::<usize>(), 1 << n);
            let e0 = levels[0].0;
            let z: f64 = levels
                .iter()
                .map(|&(e, g)| g as f64 * (-beta * (e - e0)).exp())
                .sum();
            for &(e, g) in &levels {
                let level_p = g as f64 * (-beta * (e - e0)).exp() / z;
                let summed: f64 = (0..1usize << n)
                    .filter(|&k| (p.energy_of_index(k) - e).abs() <= 1e-12)
                    .map(|k| per_config.get(k))
                    .sum();
                assert!((level_p - summed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gibbs_is_gauge_invariant() {
        use crate::problems::gauge_relabel_index;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        for _ in 0..10 {
            let n = rng.gen_range(1..=6);
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut couplings: Vec<(usize, usize, f64)> = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.5) {
                        couplings.push((a, b, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            let p = IsingProblem::new(h, couplings).unwrap();
            let flips: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let q = p.spin_reversal_transform(&flips).unwrap();
            let beta = rng.gen_range(0.5..8.0);
            let gp = gibbs_probabilities(&p, beta).unwrap();
            let gq = gibbs_probabilities(&q, beta).unwrap();
            for k in 0..1usize << n {
                let k2 = gauge_relabel_index(n, k, &flips);
                assert!((gp.get(k) - gq.get(k2)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn chain_closed_form_matches_brute_force() {
        for n in 2..=12 {
            for j in [-0.1, -1.0] {
                for beta in [1.0, 7.48] {
                    let chain = IsingProblem::chain(n, j).unwrap();
                    let brute = brute_force_mean_energy(&chain, beta);
                    let closed = chain_mean_energy(n, j, beta).unwrap();
                    assert!(
                        (brute - closed).abs() < 1e-10,
                        "n = {n}, J = {j}, beta = {beta}: {brute} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn chain_reference_points() {
        // N = 10, J = −0.1, β = 7.48.
        let e = chain_mean_energy(10, -0.1, 7.48).unwrap();
        assert!((e - (-0.9 * (0.748f64).tanh())).abs() < 1e-15);
        assert!((e + 0.5706).abs() < 1e-3);

        // β = 0 has zero mean energy; β → ∞ saturates at the ground state.
        assert_eq!(chain_mean_energy(7, -0.3, 0.0).unwrap(), 0.0);
        let sat = chain_mean_energy(2, -0.1, 1e6).unwrap();
        assert!((sat - (-0.1)).abs() < 1e-12);

        assert!(chain_mean_energy(1, -0.1, 1.0).is_err());
    }

    #[test]
    fn fit_beta_on_single_spin_probabilities() {
        let problem = IsingProblem::one_spin(0.1);
        let observed = ProbabilityVector::new(vec![0.2, 0.8]).unwrap();
        let beta = fit_beta(&[Observation::Probabilities { problem, observed }]).unwrap();
        let expected = (0.8f64 / 0.2).ln() / 0.2;
        assert!((beta - expected).abs() < 1e-6, "beta = {beta}");
        assert!((temperature_mk_from_beta(beta) - 29.7).abs() < 0.1);
    }

    #[test]
    fn fit_beta_round_trips_chain_energies() {
        let truth = 7.48;
        let obs: Vec<Observation> = [10usize, 20, 50, 100, 300, 1000]
            .iter()
            .map(|&n| Observation::ChainMeanEnergy {
                n,
                coupling: -0.1,
                observed: chain_mean_energy(n, -0.1, truth).unwrap(),
            })
            .collect();
        let beta = fit_beta(&obs).unwrap();
        assert!((beta - truth).abs() < 1e-6, "beta = {beta}");
    }

    #[test]
    fn fit_beta_rejects_uniform_data() {
        let problem = IsingProblem::new(vec![0.0, 0.0], vec![]).unwrap();
        let observed = ProbabilityVector::uniform(4);
        let err = fit_beta(&[Observation::Probabilities { problem, observed }]);
        assert!(matches!(err, Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn temperature_conversions() {
        assert!((temperature_mk_from_beta(6.93) - 29.7).abs() < 0.1);
        assert!((temperature_mk_from_beta(5.64) - 36.5).abs() < 0.1);
        assert!((beta_from_temperature_mk(29.7) - 6.93).abs() < 0.01);
        assert!((beta_from_temperature_mk(35.0) - 5.886).abs() < 0.001);
    }
}
