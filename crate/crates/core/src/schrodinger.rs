//! Ideal closed-system annealing dynamics.
//!
//! Integrates the time-dependent Schrödinger equation for
//!
//! ```text
//! H(t)/ħ = −π·A(s)·Σᵢ σᵢˣ + π·B′(s)·Σᵢ hᵢ σᵢᶻ + π·B(s)·Σ_{i>j} J_ij σᵢᶻσⱼᶻ
//! ```
//!
//! (plus constant flux-bias σᶻ terms for embedded problems) with a
//! second-order symmetric product formula: the diagonal part is applied as
//! exact phases for half a step, the transverse-field part as exact per-qubit
//! rotations for a full step, then the diagonal half again, all with
//! coefficients evaluated at the step midpoint. Every factor is exactly
//! unitary, so the norm is conserved to rounding regardless of step size.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::problems::{EmbeddedProblem, IsingProblem, MAX_QUBITS};
use crate::schedule::{OnsetWindow, Schedule};

/// A normalized state vector over 2^n basis amplitudes.
#[derive(Debug, Clone)]
pub struct QuantumState {
    n: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidParams(format!("n = {n} outside 1..={MAX_QUBITS}")));
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    }

    /// Basis populations |c_k|² in the crate index convention.
    pub fn populations(&self) -> ProbabilityVector {
        ProbabilityVector::new(self.amps.iter().map(|a| a.norm_sqr()).collect())
            .expect("normalized state yields a probability vector")
    }
}

/// The uniform superposition |++…+⟩, the driver ground state.
pub fn uniform_superposition(n: usize) -> Result<QuantumState> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidParams(format!("n = {n} outside 1..={MAX_QUBITS}")));
    }
    let dim = 1usize << n;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    QuantumState::from_amplitudes(n, vec![amp; dim])
}

/// What an anneal runs on: a bare problem, or its fast-anneal embedding with
/// flux-biased auxiliary qubits.
#[derive(Debug, Clone)]
pub enum AnnealTarget {
    Problem(IsingProblem),
    Embedded(EmbeddedProblem),
}

impl AnnealTarget {
    fn problem(&self) -> &IsingProblem {
        match self {
            AnnealTarget::Problem(p) => p,
            AnnealTarget::Embedded(e) => e.embedded(),
        }
    }
}

/// One closed-system anneal: target, schedule pair, onset window, duration,
/// and time step (all times in ns).
#[derive(Debug, Clone)]
pub struct AnnealRun {
    target: AnnealTarget,
    schedule: Schedule,
    onset: OnsetWindow,
    t_a_ns: f64,
    dt_ns: f64,
}

impl AnnealRun {
    pub fn new(
        problem: IsingProblem,
        schedule: Schedule,
        onset: OnsetWindow,
        t_a_ns: f64,
        dt_ns: f64,
    ) -> Result<Self> {
        Self::build(AnnealTarget::Problem(problem), schedule, onset, t_a_ns, dt_ns)
    }

    pub fn embedded(
        embedded: EmbeddedProblem,
        schedule: Schedule,
        onset: OnsetWindow,
        t_a_ns: f64,
        dt_ns: f64,
    ) -> Result<Self> {
        Self::build(AnnealTarget::Embedded(embedded), schedule, onset, t_a_ns, dt_ns)
    }

    fn build(
        target: AnnealTarget,
        schedule: Schedule,
        onset: OnsetWindow,
        t_a_ns: f64,
        dt_ns: f64,
    ) -> Result<Self> {
        if !(dt_ns > 0.0 && dt_ns <= t_a_ns) {
            return Err(Error::InvalidParams(format!(
                "need 0 < dt ≤ t_a, got dt = {dt_ns} ns, t_a = {t_a_ns} ns"
            )));
        }
        Ok(Self {
            target,
            schedule,
            onset,
            t_a_ns,
            dt_ns,
        })
    }

    pub fn t_a_ns(&self) -> f64 {
        self.t_a_ns
    }

    pub fn propagator(&self) -> Propagator<'_> {
        Propagator::new(self)
    }

    /// Initial state: |+⟩ on every problem qubit; embedded auxiliaries start
    /// in their flux-pinned |↑⟩ state (the bias term is constant, not
    /// annealed, so they are prepared aligned).
    pub fn initial_state(&self) -> QuantumState {
        match &self.target {
            AnnealTarget::Problem(p) => uniform_superposition(p.n()).expect("validated n"),
            AnnealTarget::Embedded(e) => {
                let n = e.embedded().n();
                let n_orig = e.original().n();
                let dim = 1usize << n;
                let amp = ((1usize << n_orig) as f64).sqrt().recip();
                let mut amps = vec![Complex64::new(0.0, 0.0); dim];
                // Original qubits are the high bits; auxiliaries must sit in
                // bit value 0 (S = +1).
                let aux_bits = n - n_orig;
                for orig in 0..1usize << n_orig {
                    amps[orig << aux_bits] = Complex64::new(amp, 0.0);
                }
                QuantumState::from_amplitudes(n, amps).expect("validated n")
            }
        }
    }
}

/// The product-formula stepper, reusable across steps and runs.
pub struct Propagator<'a> {
    run: &'a AnnealRun,
    n: usize,
    /// Σᵢ hᵢ·Sᵢ(k) per basis state (multiplied by π·B′ at step time).
    field_energy: Vec<f64>,
    /// Σ J_ij·Sᵢ(k)·Sⱼ(k) per basis state (multiplied by π·B).
    coupling_energy: Vec<f64>,
    /// Constant σᶻ terms in rad/ns (flux bias), already summed per state.
    bias_energy: Vec<f64>,
}

impl<'a> Propagator<'a> {
    fn new(run: &'a AnnealRun) -> Self {
        let problem = run.target.problem();
        let n = problem.n();
        let dim = 1usize << n;
        let spin = |k: usize, site: usize| -> f64 {
            if (k >> (n - 1 - site)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };

        let mut field_energy = vec![0.0; dim];
        let mut coupling_energy = vec![0.0; dim];
        for k in 0..dim {
            for (i, &hi) in problem.fields().iter().enumerate() {
                field_energy[k] += hi * spin(k, i);
            }
            for &(a, b, j) in problem.couplings() {
                coupling_energy[k] += j * spin(k, a) * spin(k, b);
            }
        }

        let bias_energy = match &run.target {
            AnnealTarget::Problem(_) => vec![0.0; dim],
            AnnealTarget::Embedded(e) => {
                let bias = e.bias_terms();
                (0..dim)
                    .map(|k| bias.iter().enumerate().map(|(i, &bi)| bi * spin(k, i)).sum())
                    .collect()
            }
        };

        Self {
            run,
            n,
            field_energy,
            coupling_energy,
            bias_energy,
        }
    }

    /// Schedule coefficients (π·A, π·B′, π·B) in rad/ns at time `t_ns`.
    fn coefficients(&self, t_ns: f64) -> Result<(f64, f64, f64)> {
        let s = (t_ns / self.run.t_a_ns).clamp(0.0, 1.0);
        let a = self.run.schedule.eval_a(s)?;
        let b = self.run.schedule.eval_b(s)?;
        let bp = self
            .run
            .schedule
            .eval_b_prime(&self.run.onset, t_ns.clamp(0.0, self.run.t_a_ns), self.run.t_a_ns)?;
        let pi = std::f64::consts::PI;
        Ok((pi * a, pi * bp, pi * b))
    }

    /// One symmetric step of width `dt_ns`, coefficients frozen at `t_mid_ns`.
    /// A negative `dt_ns` applies the exact inverse.
    pub fn step(&self, state: &mut QuantumState, t_mid_ns: f64, dt_ns: f64) -> Result<()> {
        let (wa, wbp, wb) = self.coefficients(t_mid_ns)?;
        self.apply_diag(state, 0.5 * dt_ns, wbp, wb);
        let theta = dt_ns * wa; // exp(+iθσˣ) per qubit: driver is −π·A·Σσˣ
        for q in 0..self.n {
            apply_x_rotation(&mut state.amps, self.n, q, theta);
        }
        self.apply_diag(state, 0.5 * dt_ns, wbp, wb);
        Ok(())
    }

    fn apply_diag(&self, state: &mut QuantumState, dt: f64, wbp: f64, wb: f64) {
        for (k, amp) in state.amps.iter_mut().enumerate() {
            let d = wbp * self.field_energy[k] + wb * self.coupling_energy[k] + self.bias_energy[k];
            let phase = Complex64::from_polar(1.0, -dt * d);
            *amp *= phase;
        }
    }
}

fn apply_x_rotation(amps: &mut [Complex64], n: usize, qubit: usize, theta: f64) {
    let stride = 1usize << (n - 1 - qubit);
    let c = theta.cos();
    let is = Complex64::new(0.0, theta.sin());
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for k in base..base + stride {
            let lo = amps[k];
            let hi = amps[k + stride];
            amps[k] = lo * c + hi * is;
            amps[k + stride] = lo * is + hi * c;
        }
        base += 2 * stride;
    }
}

/// Evolve the run's initial state to t = t_a and return the final state.
///
/// The requested dt is rounded to an integer number of uniform steps.
pub fn evolve_tdse(run: &AnnealRun) -> Result<QuantumState> {
    let prop = run.propagator();
    let mut state = run.initial_state();
    let steps = (run.t_a_ns / run.dt_ns).round().max(1.0) as u64;
    let dt = run.t_a_ns / steps as f64;
    for j in 0..steps {
        let t_mid = (j as f64 + 0.5) * dt;
        prop.step(&mut state, t_mid, dt)?;
    }
    let drift = (state.norm() - 1.0).abs();
    if drift > 1e-6 {
        return Err(Error::IntegrationFailure(format!(
            "norm drift {drift:.3e} exceeds 1e-6"
        )));
    }
    Ok(state)
}

/// Basis populations of a state (convenience wrapper).
pub fn populations(state: &QuantumState) -> ProbabilityVector {
    state.populations()
}
