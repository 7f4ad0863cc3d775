//! Classical master equation on the four diagonal populations.
//!
//! Ignoring the off-diagonal density-matrix elements and the transverse
//! driver reduces the two-spin open-system model to dP/dt = W(t)·P(t) with
//! the hub-topology generator
//!
//! ```text
//!       ⎛ −γ₂−γ₅−γ₇   γ₄    γ₆    γ₁ ⎞
//!   W = ⎜    γ₅       −γ₄   0     0  ⎟
//!       ⎜    γ₇        0   −γ₆    0  ⎟
//!       ⎝    γ₂        0    0    −γ₁ ⎠
//! ```
//!
//! whose columns sum to zero, so probability is conserved. **State order**:
//! the matrix is laid out for the population vector (p_↑↑, p_↓↑, p_↑↓, p_↓↓);
//! the crate-wide index convention orders the middle two states the other
//! way around, and [`evolve_markov`] converts at the boundary.
//!
//! Rates are the same time-dependent detailed-balance rates as the GKSL
//! model ([`crate::lindblad::rates_at`]); each step applies the exact
//! exponential of the frozen generator (uniformization), which preserves
//! nonnegativity and normalization by construction.

use crate::error::{Error, Result};
use crate::lindblad::{rates_at, DissipationSpec};
use crate::prob::ProbabilityVector;
use crate::problems::IsingProblem;
use crate::schedule::{OnsetWindow, Schedule};

/// Default step in ns; rates drift slowly, so 1 ns is ample.
pub const DEFAULT_DT_NS: f64 = 1.0;

/// Permutation between crate index order (↑↑, ↑↓, ↓↑, ↓↓) and the generator's
/// state order (↑↑, ↓↑, ↑↓, ↓↓). It is its own inverse.
const PERM: [usize; 4] = [0, 2, 1, 3];

/// The 4×4 rate matrix W assembled from (γ₁…γ₇); γ₃ is pure dephasing and
/// does not enter.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    w: [[f64; 4]; 4],
}

/// Assemble W from the seven rates. Off-diagonal entries are the γ's; each
/// diagonal entry is the exact negation of its column's off-diagonal sum.
pub fn build_w(rates: &[f64; 7]) -> Result<RateMatrix> {
    if rates.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(Error::InvalidParams(format!("rates must be ≥ 0: {rates:?}")));
    }
    let [g1, g2, _g3, g4, g5, g6, g7] = *rates;
    let mut w = [[0.0f64; 4]; 4];
    w[1][0] = g5;
    w[2][0] = g7;
    w[3][0] = g2;
    w[0][1] = g4;
    w[0][2] = g6;
    w[0][3] = g1;
    for col in 0..4 {
        let mut off = 0.0;
        for row in 0..4 {
            if row != col {
                off += w[row][col];
            }
        }
        w[col][col] = -off;
    }
    Ok(RateMatrix { w })
}

impl RateMatrix {
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.w[row][col]
    }

    /// Column sums, accumulated off-diagonals-first in row order, so the
    /// construction guarantee (sum + diagonal = exactly 0) is visible.
    pub fn column_sums(&self) -> [f64; 4] {
        let mut sums = [0.0f64; 4];
        for col in 0..4 {
            let mut off = 0.0;
            for row in 0..4 {
                if row != col {
                    off += self.w[row][col];
                }
            }
            sums[col] = off + self.w[col][col];
        }
        sums
    }

    fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0f64; 4];
        for (row, out_r) in out.iter_mut().enumerate() {
            *out_r = (0..4).map(|col| self.w[row][col] * p[col]).sum();
        }
        out
    }

    /// P(t + dt) = e^{W·dt}·P(t) by uniformization: every Poisson term is
    /// nonnegative, so positivity cannot be lost to cancellation.
    pub fn propagate(&self, p: &[f64; 4], dt: f64) -> [f64; 4] {
        let alpha = (0..4).map(|i| -self.w[i][i]).fold(0.0f64, f64::max);
        if alpha * dt == 0.0 {
            return *p;
        }
        // Keep the Poisson parameter moderate per pass.
        let pieces = (alpha * dt / 30.0).ceil().max(1.0) as u64;
        let m = alpha * dt / pieces as f64;

        let mut state = *p;
        for _ in 0..pieces {
            let mut acc = [0.0f64; 4];
            let mut term = state;
            let mut weight = (-m).exp();
            for entry in acc.iter_mut().zip(term.iter()) {
                *entry.0 = weight * entry.1;
            }
            let mut cumulative = weight;
            let mut k = 1u64;
            while 1.0 - cumulative > 1e-18 && k < 400 {
                // term ← T·term with T = W/α + I (nonnegative).
                let wt = self.apply(&term);
                for i in 0..4 {
                    term[i] += wt[i] / alpha;
                }
                weight *= m / k as f64;
                cumulative += weight;
                for i in 0..4 {
                    acc[i] += weight * term[i];
                }
                k += 1;
            }
            state = acc;
        }
        state
    }

    /// The probability vector annihilated by W (unique for the connected
    /// hub topology), via a pivoted 4×4 solve with Σπ = 1 appended.
    pub fn stationary_distribution(&self) -> Result<[f64; 4]> {
        let mut a = [[0.0f64; 5]; 4];
        for row in 0..3 {
            for col in 0..4 {
                a[row][col] = self.w[row][col];
            }
        }
        for col in 0..4 {
            a[3][col] = 1.0;
        }
        a[3][4] = 1.0;

        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
                .unwrap();
            if a[pivot][col].abs() < 1e-14 {
                return Err(Error::NonIdentifiable("singular rate matrix".into()));
            }
            a.swap(col, pivot);
            for row in 0..4 {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..5 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        let mut pi = [0.0f64; 4];
        for i in 0..4 {
            pi[i] = a[i][4] / a[i][i];
        }
        Ok(pi)
    }
}

/// Evolve P(0) = (¼, ¼, ¼, ¼) to t = t_a with rates refreshed each step.
/// Input and output are in the crate index order.
pub fn evolve_markov(
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    spec: &DissipationSpec,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<ProbabilityVector> {
    if !(dt_ns > 0.0 && dt_ns <= t_a_ns) {
        return Err(Error::InvalidParams(format!(
            "need 0 < dt ≤ t_a, got dt = {dt_ns}, t_a = {t_a_ns}"
        )));
    }
    let steps = (t_a_ns / dt_ns).round().max(1.0) as u64;
    let dt = t_a_ns / steps as f64;
    let mut p = [0.25f64; 4]; // generator order; uniform is order-free
    for j in 0..steps {
        let t_mid = (j as f64 + 0.5) * dt;
        let rates = rates_at(spec, problem, schedule, window, t_mid, t_a_ns)?;
        let w = build_w(&rates)?;
        p = w.propagate(&p, dt);
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::IntegrationFailure(format!(
                "population drift {:.3e} at step {j}",
                total - 1.0
            )));
        }
    }
    ProbabilityVector::new(PERM.iter().map(|&k| p[k]).collect())
}

/// Rates → W → stationary distribution, returned in crate index order.
pub fn stationary_populations(rates: &[f64; 7]) -> Result<ProbabilityVector> {
    let pi = build_w(rates)?.stationary_distribution()?;
    ProbabilityVector::new(PERM.iter().map(|&k| pi[k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{beta_from_temperature_mk, gibbs_probabilities};
    use crate::problems::instances;

    #[test]
    fn w_layout_matches_the_stated_form() {
        let zero = build_w(&[0.0; 7]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(zero.entry(r, c), 0.0);
            }
        }

        let g1_only = build_w(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = match (r, c) {
                    (0, 3) => 1.0,
                    (3, 3) => -1.0,
                    _ => 0.0,
                };
                assert_eq!(g1_only.entry(r, c), expected);
            }
        }

        // γ₃ is dephasing-only and absent from W.
        let g3_only = build_w(&[0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(g3_only.entry(r, c), 0.0);
            }
        }
    }

    #[test]
    fn column_sums_are_exactly_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..100 {
            let rates: [f64; 7] = std::array::from_fn(|_| rng.gen_range(0.0..3.0));
            let w = build_w(&rates).unwrap();
            for s in w.column_sums() {
                assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn negative_rates_are_rejected() {
        assert!(build_w(&[0.1, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn stationary_vector_is_a_fixed_point_of_propagation() {
        let rates = [0.01, 0.002, 0.0, 0.01, 0.005, 0.01, 0.004];
        let w = build_w(&rates).unwrap();
        let pi = w.stationary_distribution().unwrap();
        let mut p = pi;
        for _ in 0..1000 {
            p = w.propagate(&p, 5.0);
        }
        for k in 0..4 {
            assert!((p[k] - pi[k]).abs() < 1e-12, "component {k}");
        }
    }

    #[test]
    fn propagation_conserves_and_stays_nonnegative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(23);
        for _ in 0..50 {
            let rates: [f64; 7] = std::array::from_fn(|_| rng.gen_range(0.0..1.5));
            let w = build_w(&rates).unwrap();
            let mut p = [0.25f64; 4];
            for _ in 0..200 {
                p = w.propagate(&p, rng.gen_range(0.1..5.0));
                assert!(p.iter().all(|&x| x >= 0.0));
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_final_rates_have_the_gibbs_stationary_state() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let t_a = 100_000.0;
        let rates = rates_at(&spec, &p, &Schedule::standard(), &w, t_a, t_a).unwrap();
        let pi = stationary_populations(&rates).unwrap();
        let gibbs = gibbs_probabilities(&p, beta).unwrap();
        for k in 0..4 {
            assert!(
                (pi.get(k) - gibbs.get(k)).abs() < 1e-8,
                "k = {k}: {} vs {}",
                pi.get(k),
                gibbs.get(k)
            );
        }
    }

    #[test]
    fn long_anneal_reaches_equilibrium() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let out = evolve_markov(&p, &Schedule::standard(), &w, &spec, 100_000.0, DEFAULT_DT_NS)
            .unwrap();
        let gibbs = gibbs_probabilities(&p, beta).unwrap();
        assert!(out.max_abs_diff(&gibbs) < 1e-3);
    }

    #[test]
    fn asymmetric_instance_lands_on_gibbs_in_crate_order() {
        // h₁ ≠ h₂ splits p_↑↓ from p_↓↑, pinning the state-order conversion.
        let problem = IsingProblem::two_spin(-0.4, 0.15, 0.2).unwrap();
        let beta = 4.0;
        let spec = DissipationSpec::new(0.02, beta).unwrap();
        let out = evolve_markov(
            &problem,
            &Schedule::standard(),
            &OnsetWindow::none(),
            &spec,
            50_000.0,
            DEFAULT_DT_NS,
        )
        .unwrap();
        let gibbs = gibbs_probabilities(&problem, beta).unwrap();
        assert!(
            out.max_abs_diff(&gibbs) < 1e-3,
            "got {:?} want {:?}",
            out.as_slice(),
            gibbs.as_slice()
        );
        // The two middle components genuinely differ for this instance.
        assert!((gibbs.get(1) - gibbs.get(2)).abs() > 0.05);
    }

    #[test]
    fn dip_appears_only_with_the_onset_window() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let sched = Schedule::standard();
        let with_window = evolve_markov(
            &p,
            &sched,
            &OnsetWindow::from_us(0.0, 1.2).unwrap(),
            &spec,
            600.0,
            DEFAULT_DT_NS,
        )
        .unwrap();
        let without = evolve_markov(&p, &sched, &OnsetWindow::none(), &spec, 600.0, DEFAULT_DT_NS)
            .unwrap();
        assert!(with_window.get(0) < 0.1, "p_upup = {}", with_window.get(0));
        assert!(without.get(0) > 0.3, "p_upup = {}", without.get(0));
    }
}
