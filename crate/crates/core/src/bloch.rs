//! One-spin relaxation dynamics.
//!
//! Integrates the magnetization equations for a spin-1/2 in an effective
//! field B(t), written for H = −½ B·σ:
//!
//! ```text
//! dSˣ/dt = Sʸ Bᶻ − Sᶻ Bʸ − Sˣ/T₂
//! dSʸ/dt = Sᶻ Bˣ − Sˣ Bᶻ − Sʸ/T₂
//! dSᶻ/dt = Sˣ Bʸ − Sʸ Bˣ − (Sᶻ − M₀)/T₁
//! ```
//!
//! This is the two-level GKSL equation with jump operators σ⁺, σ⁻, σᶻ at
//! rates γ₁, γ₂, γ₃, under the mapping T₂ = 2/(γ₁+γ₂+4γ₃), T₁ = 1/(γ₁+γ₂),
//! M₀ = (γ₁−γ₂)/(γ₁+γ₂), which implies T₂ ≤ 2 T₁.
//!
//! For an anneal of a one-spin problem with field h₁ the effective field is
//! Bˣ = 2π·A(s), Bᶻ = −2π·B(s)·h₁ (rad/ns), so that −½B·σ reproduces the
//! annealing Hamiltonian; the signs give p_↓ > p_↑ for h₁ > 0 with M₀ < 0.

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::problems::IsingProblem;
use crate::schedule::{OnsetWindow, Schedule};

/// Magnetization components (Sˣ, Sʸ, Sᶻ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub s: [f64; 3],
}

impl BlochState {
    /// The |+⟩ state: S = (1, 0, 0).
    pub fn plus() -> Self {
        Self { s: [1.0, 0.0, 0.0] }
    }

    pub fn norm(&self) -> f64 {
        self.s.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// (p_↑, p_↓) = ((1 + Sᶻ)/2, (1 − Sᶻ)/2).
    pub fn populations(&self) -> ProbabilityVector {
        let sz = self.s[2].clamp(-1.0, 1.0);
        ProbabilityVector::new(vec![0.5 * (1.0 + sz), 0.5 * (1.0 - sz)])
            .expect("clamped populations normalize")
    }
}

/// Relaxation times (ns) and equilibrium magnetization. Infinite times are
/// allowed and switch the corresponding damping off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParams {
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub m0: f64,
}

impl BlochParams {
    pub fn new(t1_ns: f64, t2_ns: f64, m0: f64) -> Result<Self> {
        if !(t1_ns > 0.0) || !(t2_ns > 0.0) {
            return Err(Error::InvalidParams(format!(
                "relaxation times must be positive: T1 = {t1_ns}, T2 = {t2_ns}"
            )));
        }
        if t2_ns > 2.0 * t1_ns {
            return Err(Error::InvalidParams(format!(
                "T2 = {t2_ns} exceeds 2·T1 = {}",
                2.0 * t1_ns
            )));
        }
        if !(m0.abs() <= 1.0) {
            return Err(Error::InvalidParams(format!("|M0| = {} exceeds 1", m0.abs())));
        }
        Ok(Self { t1_ns, t2_ns, m0 })
    }

    /// Dissipation switched off entirely.
    pub fn lossless() -> Self {
        Self {
            t1_ns: f64::INFINITY,
            t2_ns: f64::INFINITY,
            m0: 0.0,
        }
    }

    /// Map two-level jump rates (γ₁, γ₂, γ₃) for (σ⁺, σ⁻, σᶻ) onto
    /// (T₁, T₂, M₀).
    pub fn from_rates(gamma: [f64; 3]) -> Result<Self> {
        let [g1, g2, g3] = gamma;
        if gamma.iter().any(|&g| g < 0.0 || !g.is_finite()) {
            return Err(Error::InvalidParams(format!("rates must be ≥ 0: {gamma:?}")));
        }
        let sum = g1 + g2;
        let t1 = 1.0 / sum;
        let t2 = 2.0 / (sum + 4.0 * g3);
        let m0 = if sum > 0.0 { (g1 - g2) / sum } else { 0.0 };
        Self::new(t1, t2, m0)
    }

    /// Inverse of [`BlochParams::from_rates`].
    pub fn rates(&self) -> [f64; 3] {
        let sum = 1.0 / self.t1_ns;
        let g1 = 0.5 * sum * (1.0 + self.m0);
        let g2 = 0.5 * sum * (1.0 - self.m0);
        let g3 = 0.25 * (2.0 / self.t2_ns - sum);
        [g1, g2, g3.max(0.0)]
    }
}

/// Gibbs value of Sᶻ for the final one-spin Hamiltonian: −tanh(β·h₁).
/// The principled default for M₀.
pub fn equilibrium_m0(h1: f64, beta: f64) -> f64 {
    -(beta * h1).tanh()
}

/// Effective field of a one-spin anneal at time t (rad/ns).
pub fn anneal_field<'a>(
    schedule: &'a Schedule,
    onset: &'a OnsetWindow,
    h1: f64,
    t_a_ns: f64,
) -> impl Fn(f64) -> [f64; 3] + 'a {
    move |t_ns: f64| {
        let t = t_ns.clamp(0.0, t_a_ns);
        let s = t / t_a_ns;
        let a = schedule.eval_a(s).unwrap_or(0.0);
        let bp = schedule.eval_b_prime(onset, t, t_a_ns).unwrap_or(0.0);
        let tau = 2.0 * std::f64::consts::PI;
        [tau * a, 0.0, -tau * bp * h1]
    }
}

fn rhs(s: [f64; 3], b: [f64; 3], inv_t1: f64, inv_t2: f64, m0: f64) -> [f64; 3] {
    [
        s[1] * b[2] - s[2] * b[1] - s[0] * inv_t2,
        s[2] * b[0] - s[0] * b[2] - s[1] * inv_t2,
        s[0] * b[1] - s[1] * b[0] - (s[2] - m0) * inv_t1,
    ]
}

/// Fixed-step RK4 under an arbitrary field function, from an explicit
/// initial state.
pub fn evolve_field(
    field: impl Fn(f64) -> [f64; 3],
    params: &BlochParams,
    initial: BlochState,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<BlochState> {
    if !(dt_ns > 0.0 && dt_ns <= t_a_ns) {
        return Err(Error::InvalidParams(format!(
            "need 0 < dt ≤ t_a, got dt = {dt_ns}, t_a = {t_a_ns}"
        )));
    }
    let steps = (t_a_ns / dt_ns).round().max(1.0) as u64;
    let dt = t_a_ns / steps as f64;
    let inv_t1 = 1.0 / params.t1_ns;
    let inv_t2 = 1.0 / params.t2_ns;
    let m0 = params.m0;

    let mut s = initial.s;
    for j in 0..steps {
        let t = j as f64 * dt;
        let (b1, b2, b4) = (field(t), field(t + 0.5 * dt), field(t + dt));
        let k1 = rhs(s, b1, inv_t1, inv_t2, m0);
        let y2 = add_scaled(s, k1, 0.5 * dt);
        let k2 = rhs(y2, b2, inv_t1, inv_t2, m0);
        let y3 = add_scaled(s, k2, 0.5 * dt);
        let k3 = rhs(y3, b2, inv_t1, inv_t2, m0);
        let y4 = add_scaled(s, k3, dt);
        let k4 = rhs(y4, b4, inv_t1, inv_t2, m0);
        for i in 0..3 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(BlochState { s })
}

#[inline]
fn add_scaled(s: [f64; 3], k: [f64; 3], h: f64) -> [f64; 3] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

/// Anneal a one-spin problem from |+⟩ and return the final magnetization.
pub fn evolve_bloch(
    problem: &IsingProblem,
    schedule: &Schedule,
    params: &BlochParams,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<BlochState> {
    if problem.n() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: problem.n(),
        });
    }
    let onset = OnsetWindow::none();
    let field = anneal_field(schedule, &onset, problem.fields()[0], t_a_ns);
    evolve_field(field, params, BlochState::plus(), t_a_ns, dt_ns)
}

/// Magnetization sampled at the requested times (ascending, within t_a).
pub fn trajectory(
    field: impl Fn(f64) -> [f64; 3] + Copy,
    params: &BlochParams,
    initial: BlochState,
    sample_times: &[f64],
    dt_ns: f64,
) -> Result<Vec<BlochState>> {
    let mut out = Vec::with_capacity(sample_times.len());
    let mut state = initial;
    let mut t = 0.0;
    for &ts in sample_times {
        if ts < t {
            return Err(Error::InvalidParams("sample times must be ascending".into()));
        }
        if ts > t {
            let span = ts - t;
            let shifted = move |tau: f64| field(t + tau);
            state = evolve_field(shifted, params, state, span, dt_ns.min(span))?;
            t = ts;
        }
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(BlochParams::new(500.0, 125.0, -0.58).is_ok());
        assert!(BlochParams::new(500.0, 1001.0, 0.0).is_err());
        assert!(BlochParams::new(-1.0, 10.0, 0.0).is_err());
        assert!(BlochParams::new(10.0, 10.0, 1.5).is_err());
        // T2 = 2·T1 is the boundary and allowed.
        assert!(BlochParams::new(10.0, 20.0, 0.0).is_ok());
    }

    #[test]
    fn rate_mapping_round_trips() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = [
                rng.gen_range(0.001..0.1),
                rng.gen_range(0.001..0.1),
                rng.gen_range(0.0..0.05),
            ];
            let p = BlochParams::from_rates(g).unwrap();
            assert!(p.t2_ns <= 2.0 * p.t1_ns + 1e-12);
            let back = p.rates();
            for i in 0..3 {
                assert!((back[i] - g[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equilibrium_m0_values() {
        assert!((equilibrium_m0(0.1, 6.93) + 0.5999).abs() < 1e-3);
        assert!((equilibrium_m0(0.2, 6.93) + 0.8823).abs() < 1e-3);
        assert_eq!(equilibrium_m0(0.0, 6.93), 0.0);
    }

    #[test]
    fn free_spin_is_stationary() {
        let params = BlochParams::lossless();
        let out = evolve_field(|_| [0.0; 3], &params, BlochState::plus(), 100.0, 0.01).unwrap();
        assert_eq!(out.s, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn matches_damped_precession_closed_form() {
        // Constant field along z: S⁺(t) = S⁺(0)·e^{−iωt − t/T₂},
        // Sᶻ(t) = M₀ + (Sᶻ(0) − M₀)·e^{−t/T₁}.
        let omega = 1.3;
        let params = BlochParams::new(40.0, 30.0, -0.4).unwrap();
        let s0 = BlochState { s: [0.8, -0.3, 0.5] };
        for t in [5.0, 12.5, 25.0] {
            let got = evolve_field(|_| [0.0, 0.0, omega], &params, s0, t, 5e-4).unwrap();
            let decay_t2 = (-t / params.t2_ns).exp();
            let (sin, cos) = (omega * t).sin_cos();
            // dS⁺/dt = −iωS⁺ means (Sx + iSy)(t) = (Sx0 + iSy0)·e^{−iωt}·e^{−t/T2}.
            let sx = decay_t2 * (s0.s[0] * cos + s0.s[1] * sin);
            let sy = decay_t2 * (s0.s[1] * cos - s0.s[0] * sin);
            let sz = params.m0 + (s0.s[2] - params.m0) * (-t / params.t1_ns).exp();
            assert!((got.s[0] - sx).abs() < 1e-8, "Sx at t = {t}");
            assert!((got.s[1] - sy).abs() < 1e-8, "Sy at t = {t}");
            assert!((got.s[2] - sz).abs() < 1e-8, "Sz at t = {t}");
        }
    }

    #[test]
    fn relaxes_to_m0_under_static_field() {
        let params = BlochParams::new(50.0, 80.0, -0.6).unwrap();
        let t = 1600.0; // 20 e-foldings of the slowest time
        let out = evolve_field(|_| [0.0, 0.0, 2.0], &params, BlochState::plus(), t, 0.01).unwrap();
        assert!((out.s[2] - params.m0).abs() < 1e-6);
        assert!(out.s[0].abs() < 1e-6 && out.s[1].abs() < 1e-6);
    }

    #[test]
    fn norm_never_exceeds_unity() {
        let params = BlochParams::new(200.0, 150.0, -0.5).unwrap();
        let sched = Schedule::standard();
        let onset = OnsetWindow::none();
        let field = anneal_field(&sched, &onset, 0.3, 500.0);
        let samples: Vec<f64> = (0..=20).map(|k| 500.0 * k as f64 / 20.0).collect();
        let traj = trajectory(&field, &params, BlochState::plus(), &samples, 0.01).unwrap();
        for st in traj {
            assert!(st.norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn long_anneal_reproduces_reference_populations() {
        // h₁ = 0.1 with T₁ = 500 ns, T₂ = 125 ns, M₀ = −0.58 relaxes to
        // p_↑ = (1 + M₀)/2 = 0.21 at millisecond anneal times.
        let params = BlochParams::new(500.0, 125.0, -0.58).unwrap();
        let out = evolve_bloch(
            &IsingProblem::one_spin(0.1),
            &Schedule::standard(),
            &params,
            1e6,
            0.01,
        )
        .unwrap();
        let p = out.populations();
        assert!((p.get(0) - 0.21).abs() < 0.01, "p_up = {}", p.get(0));
        assert!((p.get(1) - 0.79).abs() < 0.01);
        assert!((p.get(0) - 0.2).abs() < 0.02);
    }

    #[test]
    fn rejects_multi_spin_problems() {
        let p = crate::problems::instances::s2_1();
        let params = BlochParams::new(500.0, 125.0, 0.0).unwrap();
        assert!(evolve_bloch(&p, &Schedule::standard(), &params, 10.0, 0.01).is_err());
    }
}
