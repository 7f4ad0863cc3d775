//! GKSL master-equation dynamics with detailed-balance dissipation.
//!
//! For two-spin problems the equation
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] + ½ Σⱼ γⱼ (2 Lⱼ ρ Lⱼ† − Lⱼ†Lⱼ ρ − ρ Lⱼ†Lⱼ)
//! ```
//!
//! is driven by seven channels in the (↑↑, ↑↓, ↓↑, ↓↓) basis:
//!
//! | channel | operator        | rate |
//! |---------|-----------------|------|
//! | 1       | \|↑↑⟩⟨↓↓\|      | γ₁ = c |
//! | 2       | \|↓↓⟩⟨↑↑\|      | γ₂ |
//! | 3       | diag(1,−1,−1,1) | γ₃ = c |
//! | 4       | \|↑↑⟩⟨↓↑\|      | γ₄ = c |
//! | 5       | \|↓↑⟩⟨↑↑\|      | γ₅ |
//! | 6       | \|↑↑⟩⟨↑↓\|      | γ₆ = c |
//! | 7       | \|↑↓⟩⟨↑↑\|      | γ₇ |
//!
//! γ₂, γ₅, γ₇ follow from detailed balance against the instantaneous Gibbs
//! state of the diagonal Hamiltonian Ĥ(t) (the one with B′ on the field
//! terms):  γ₂·p_↑↑ = γ₁·p_↓↓,  γ₅·p_↑↑ = γ₄·p_↓↑,  γ₇·p_↑↑ = γ₆·p_↑↓,
//! so the rates are time-dependent through the schedule. Energies entering
//! the Gibbs weights are normalized by B(1), which makes the t = t_a rates
//! reproduce the equilibrium distribution of the problem at inverse
//! temperature β.
//!
//! The integrator is fixed-step RK4 on the vectorized density matrix with a
//! nominal step of 0.1 ns, internally subdivided so that dt·ω stays inside
//! the RK4 imaginary-axis stability region (ω = spectral range of H(t)/ħ),
//! and halved further whenever ‖dρ/dt‖·dt > 0.1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::prob::ProbabilityVector;
use crate::problems::IsingProblem;
use crate::schedule::{OnsetWindow, Schedule};
use crate::schrodinger::QuantumState;

/// Default nominal integrator step in ns.
pub const DEFAULT_DT_NS: f64 = 0.1;

/// A dim×dim density matrix (dim = 2 or 4 here), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// |+…+⟩⟨+…+| on n qubits: every entry 1/2ⁿ.
    pub fn plus_state(n: usize) -> Self {
        let dim = 1usize << n;
        let v = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            dim,
            data: vec![v; dim * dim],
        }
    }

    pub fn from_pure(state: &QuantumState) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(amps[i] * amps[j].conj());
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = (self.data[i * self.dim + j] - self.data[j * self.dim + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_hermitian_eigenvalue(self.dim, self.data.clone())
    }

    pub fn max_offdiagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    worst = worst.max(self.data[i * self.dim + j].norm());
                }
            }
        }
        worst
    }

    /// Diagonal populations, clamped at readout.
    pub fn diagonal_probabilities(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::new((0..self.dim).map(|i| self.data[i * self.dim + i].re).collect())
    }

}

/// Base rate c (1/ns) and dimensionless inverse temperature β for the
/// seven-channel dissipation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationSpec {
    pub c: f64,
    pub beta: f64,
}

impl DissipationSpec {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParams(format!("base rate c = {c} must be ≥ 0")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta = {beta} must be ≥ 0")));
        }
        Ok(Self { c, beta })
    }

    /// Spec with β derived from a temperature in mK.
    pub fn from_temperature_mk(c: f64, t_mk: f64) -> Result<Self> {
        Self::new(c, crate::equilibrium::beta_from_temperature_mk(t_mk))
    }
}

/// Two-spin anneal coefficients: diagonal energies and driver strength.
struct TwoSpinAnneal<'a> {
    h1: f64,
    h2: f64,
    j: f64,
    schedule: &'a Schedule,
    window: &'a OnsetWindow,
    t_a_ns: f64,
    b_final: f64,
}

impl<'a> TwoSpinAnneal<'a> {
    fn new(
        problem: &IsingProblem,
        schedule: &'a Schedule,
        window: &'a OnsetWindow,
        t_a_ns: f64,
    ) -> Result<Self> {
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
        Ok(Self {
            h1: problem.fields()[0],
            h2: problem.fields()[1],
            j,
            schedule,
            window,
            t_a_ns,
            b_final: schedule.eval_b(1.0)?,
        })
    }

    fn spins(k: usize) -> (f64, f64) {
        let s1 = if k < 2 { 1.0 } else { -1.0 };
        let s2 = if k % 2 == 0 { 1.0 } else { -1.0 };
        (s1, s2)
    }

    fn schedule_values(&self, t_ns: f64) -> Result<(f64, f64, f64)> {
        let t = t_ns.clamp(0.0, self.t_a_ns);
        let s = t / self.t_a_ns;
        Ok((
            self.schedule.eval_a(s)?,
            self.schedule.eval_b_prime(self.window, t, self.t_a_ns)?,
            self.schedule.eval_b(s)?,
        ))
    }

    /// Driver strength π·A and the four diagonal energies of H(t)/ħ in rad/ns.
    fn hamiltonian(&self, t_ns: f64) -> Result<(f64, [f64; 4])> {
        let (a, bp, b) = self.schedule_values(t_ns)?;
        let pi = std::f64::consts::PI;
        let mut d = [0.0; 4];
        for (k, dk) in d.iter_mut().enumerate() {
            let (s1, s2) = Self::spins(k);
            *dk = pi * (bp * (self.h1 * s1 + self.h2 * s2) + b * self.j * s1 * s2);
        }
        Ok((pi * a, d))
    }

    /// Dimensionless energies of Ĥ(t) normalized by B(1), for the Gibbs
    /// weights that set the rates.
    fn scaled_energies(&self, t_ns: f64) -> Result<[f64; 4]> {
        let (_, bp, b) = self.schedule_values(t_ns)?;
        let mut e = [0.0; 4];
        for (k, ek) in e.iter_mut().enumerate() {
            let (s1, s2) = Self::spins(k);
            *ek = (bp * (self.h1 * s1 + self.h2 * s2) + b * self.j * s1 * s2) / self.b_final;
        }
        Ok(e)
    }
}

/// The seven rates (γ₁…γ₇) at time `t_ns` of a `t_a_ns` anneal.
pub fn rates_at(
    spec: &DissipationSpec,
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    t_ns: f64,
    t_a_ns: f64,
) -> Result<[f64; 7]> {
    let model = TwoSpinAnneal::new(problem, schedule, window, t_a_ns)?;
    let e = model.scaled_energies(t_ns)?;
    rates_from_energies(spec, &e)
}

fn rates_from_energies(spec: &DissipationSpec, e: &[f64; 4]) -> Result<[f64; 7]> {
    let c = spec.c;
    let beta = spec.beta;
    // Detailed balance against p_k ∝ e^{−β·E_k}:
    //   γ₂/γ₁ = p_↓↓/p_↑↑, γ₅/γ₄ = p_↓↑/p_↑↑, γ₇/γ₆ = p_↑↓/p_↑↑.
    let g2 = c * (-(beta * (e[3] - e[0]))).exp();
    let g5 = c * (-(beta * (e[2] - e[0]))).exp();
    let g7 = c * (-(beta * (e[1] - e[0]))).exp();
    let rates = [c, g2, c, c, g5, c, g7];
    if rates.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "dissipation rate overflow (beta = {beta}, energies = {e:?})"
        )));
    }
    Ok(rates)
}

/// dρ/dt for the two-spin model with frozen coefficients.
fn rhs_two_spin(
    rho: &[Complex64; 16],
    wa: f64,
    d: &[f64; 4],
    rates: &[f64; 7],
    out: &mut [Complex64; 16],
) {
    let mi = Complex64::new(0.0, -1.0);
    // Commutator: H = −wa·(σ₁ˣ + σ₂ˣ) + diag(d). Column index flips are
    // j^1 (spin 2) and j^2 (spin 1).
    for i in 0..4 {
        for j in 0..4 {
            let hrho = d[i] * rho[i * 4 + j] - wa * (rho[(i ^ 1) * 4 + j] + rho[(i ^ 2) * 4 + j]);
            let rhoh = rho[i * 4 + j] * d[j] - wa * (rho[i * 4 + (j ^ 1)] + rho[i * 4 + (j ^ 2)]);
            out[i * 4 + j] = mi * (hrho - rhoh);
        }
    }
    // Matrix-unit channels (a ← b at rate γ).
    const CHANNELS: [(usize, usize, usize); 6] =
        [(0, 3, 0), (3, 0, 1), (0, 2, 3), (2, 0, 4), (0, 1, 5), (1, 0, 6)];
    for &(a, b, ri) in &CHANNELS {
        let g = rates[ri];
        if g == 0.0 {
            continue;
        }
        out[a * 4 + a] += g * rho[b * 4 + b];
        let half = 0.5 * g;
        for k in 0..4 {
            out[b * 4 + k] -= half * rho[b * 4 + k];
            out[k * 4 + b] -= half * rho[k * 4 + b];
        }
    }
    // Collective dephasing diag(1,−1,−1,1) at γ₃ touches only coherences
    // between opposite-parity states.
    let g3 = rates[2];
    if g3 != 0.0 {
        const Z: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let w = Z[i] * Z[j] - 1.0;
                if w != 0.0 {
                    out[i * 4 + j] += g3 * w * rho[i * 4 + j];
                }
            }
        }
    }
}

fn rk4_step_two_spin(rho: &mut [Complex64; 16], h: f64, wa: f64, d: &[f64; 4], rates: &[f64; 7]) {
    let mut k1 = [Complex64::new(0.0, 0.0); 16];
    let mut k2 = k1;
    let mut k3 = k1;
    let mut k4 = k1;
    let mut tmp = *rho;

    rhs_two_spin(&tmp, wa, d, rates, &mut k1);
    for i in 0..16 {
        tmp[i] = rho[i] + 0.5 * h * k1[i];
    }
    rhs_two_spin(&tmp, wa, d, rates, &mut k2);
    for i in 0..16 {
        tmp[i] = rho[i] + 0.5 * h * k2[i];
    }
    rhs_two_spin(&tmp, wa, d, rates, &mut k3);
    for i in 0..16 {
        tmp[i] = rho[i] + h * k3[i];
    }
    rhs_two_spin(&tmp, wa, d, rates, &mut k4);
    let w = h / 6.0;
    for i in 0..16 {
        rho[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn frobenius16(m: &[Complex64; 16]) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// RK4 stays stable for purely imaginary eigenvalues up to |λ·dt| ≈ 2.83;
/// keep a safety margin.
const STABILITY_LIMIT: f64 = 1.4;
/// The ‖dρ/dt‖·dt halving threshold.
const RHS_BUDGET: f64 = 0.1;

/// Evolve ρ = |++⟩⟨++| to t = t_a under the two-spin model; returns ρ(t_a).
pub fn evolve_lindblad(
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    spec: &DissipationSpec,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<DensityMatrix> {
    let samples = evolve_lindblad_sampled(problem, schedule, window, spec, t_a_ns, dt_ns, &[t_a_ns])?;
    Ok(samples.into_iter().next().expect("one sample").1)
}

/// Evolve and record ρ at each requested time (ascending, in [0, t_a]).
pub fn evolve_lindblad_sampled(
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    spec: &DissipationSpec,
    t_a_ns: f64,
    dt_ns: f64,
    sample_times: &[f64],
) -> Result<Vec<(f64, DensityMatrix)>> {
    if !(dt_ns > 0.0 && dt_ns <= t_a_ns) {
        return Err(Error::InvalidParams(format!(
            "need 0 < dt ≤ t_a, got dt = {dt_ns}, t_a = {t_a_ns}"
        )));
    }
    let model = TwoSpinAnneal::new(problem, schedule, window, t_a_ns)?;
    let mut rho_mat = DensityMatrix::plus_state(2);
    let mut rho: [Complex64; 16] = rho_mat.data.clone().try_into().expect("dim 4");

    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = 0.0;
    for &ts in sample_times {
        if !(ts >= t && ts <= t_a_ns * (1.0 + 1e-12)) {
            return Err(Error::InvalidParams(
                "sample times must be ascending and within [0, t_a]".into(),
            ));
        }
        integrate_two_spin(&model, spec, &mut rho, t, ts, dt_ns)?;
        t = ts;
        rho_mat.data = rho.to_vec();
        out.push((ts, rho_mat.clone()));
    }
    Ok(out)
}

fn integrate_two_spin(
    model: &TwoSpinAnneal<'_>,
    spec: &DissipationSpec,
    rho: &mut [Complex64; 16],
    t_from: f64,
    t_to: f64,
    dt_ns: f64,
) -> Result<()> {
    let span = t_to - t_from;
    if span <= 0.0 {
        return Ok(());
    }
    let base_steps = (span / dt_ns).round().max(1.0) as u64;
    let base_dt = span / base_steps as f64;

    for step in 0..base_steps {
        let t0 = t_from + step as f64 * base_dt;
        let (wa0, d0) = model.hamiltonian(t0)?;
        let spread = d0.iter().cloned().fold(f64::MIN, f64::max)
            - d0.iter().cloned().fold(f64::MAX, f64::min);
        let omega = 4.0 * wa0.abs() + spread;
        let mut substeps = if omega > 0.0 {
            (base_dt * omega / STABILITY_LIMIT).ceil().max(1.0) as u64
        } else {
            1
        };

        // Halve further while the first derivative is too large for the step.
        let rates0 = rates_from_energies(spec, &model.scaled_energies(t0)?)?;
        let mut probe = [Complex64::new(0.0, 0.0); 16];
        rhs_two_spin(rho, wa0, &d0, &rates0, &mut probe);
        let rhs_norm = frobenius16(&probe);
        for _ in 0..60 {
            if rhs_norm * (base_dt / substeps as f64) <= RHS_BUDGET {
                break;
            }
            substeps *= 2;
        }

        let h = base_dt / substeps as f64;
        for sub in 0..substeps {
            let t_mid = t0 + (sub as f64 + 0.5) * h;
            let (wa, d) = model.hamiltonian(t_mid)?;
            let rates = rates_from_energies(spec, &model.scaled_energies(t_mid)?)?;
            rk4_step_two_spin(rho, h, wa, &d, &rates);
        }

        // Re-impose exact Hermitian structure; pure roundoff-scale projection.
        for i in 0..4 {
            for j in (i + 1)..4 {
                let avg = 0.5 * (rho[i * 4 + j] + rho[j * 4 + i].conj());
                rho[i * 4 + j] = avg;
                rho[j * 4 + i] = avg.conj();
            }
            rho[i * 4 + i] = Complex64::new(rho[i * 4 + i].re, 0.0);
        }

        let trace: f64 = (0..4).map(|i| rho[i * 4 + i].re).sum();
        if (trace - 1.0).abs() > 1e-6 {
            return Err(Error::IntegrationFailure(format!(
                "trace drift {:.3e} at t = {:.3} ns",
                trace - 1.0,
                t0 + base_dt
            )));
        }
    }
    Ok(())
}

/// Two-level GKSL dynamics with jump operators (σ⁺, σ⁻, σᶻ) at rates
/// (γ₁, γ₂, γ₃) under H = −½·B(t)·σ. Field components in rad/ns.
pub fn evolve_two_level(
    field: impl Fn(f64) -> [f64; 3],
    rates: [f64; 3],
    initial: &DensityMatrix,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<DensityMatrix> {
    let samples = two_level_trajectory(field, rates, initial, &[t_a_ns], dt_ns)?;
    Ok(samples.into_iter().next().expect("one sample"))
}

/// Two-level evolution sampled at the requested times.
pub fn two_level_trajectory(
    field: impl Fn(f64) -> [f64; 3],
    rates: [f64; 3],
    initial: &DensityMatrix,
    sample_times: &[f64],
    dt_ns: f64,
) -> Result<Vec<DensityMatrix>> {
    if initial.dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: initial.dim,
        });
    }
    if rates.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(Error::InvalidParams(format!("rates must be ≥ 0: {rates:?}")));
    }
    let rhs = |t: f64, r: &[Complex64; 4]| -> [Complex64; 4] {
        let [bx, by, bz] = field(t);
        let h01 = Complex64::new(-0.5 * bx, 0.5 * by); // −(Bx − iBy)/2
        let h10 = h01.conj();
        let (h00, h11) = (-0.5 * bz, 0.5 * bz);
        let mi = Complex64::new(0.0, -1.0);
        let [g1, g2, g3] = rates;
        let mut out = [Complex64::new(0.0, 0.0); 4];
        // −i[H, ρ]
        out[0] = mi * (h01 * r[2] - r[1] * h10);
        out[1] = mi * (h00 * r[1] + h01 * r[3] - r[0] * h01 - r[1] * h11);
        out[2] = mi * (h10 * r[0] + h11 * r[2] - r[2] * h00 - r[3] * h10);
        out[3] = mi * (h10 * r[1] - r[2] * h01);
        // σ⁺ pumps ↓ → ↑, σ⁻ the reverse, σᶻ dephases.
        out[0] += g1 * r[3] - g2 * r[0];
        out[3] += g2 * r[0] - g1 * r[3];
        let coh = 0.5 * (g1 + g2) + 2.0 * g3;
        out[1] -= coh * r[1];
        out[2] -= coh * r[2];
        out
    };

    let mut r: [Complex64; 4] = initial.data.clone().try_into().expect("dim 2");
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = 0.0;
    for &ts in sample_times {
        if ts < t {
            return Err(Error::InvalidParams("sample times must be ascending".into()));
        }
        if ts > t {
            let span = ts - t;
            let steps = (span / dt_ns).round().max(1.0) as u64;
            let h = span / steps as f64;
            for j in 0..steps {
                let tj = t + j as f64 * h;
                let k1 = rhs(tj, &r);
                let mut tmp = r;
                for i in 0..4 {
                    tmp[i] = r[i] + 0.5 * h * k1[i];
                }
                let k2 = rhs(tj + 0.5 * h, &tmp);
                for i in 0..4 {
                    tmp[i] = r[i] + 0.5 * h * k2[i];
                }
                let k3 = rhs(tj + 0.5 * h, &tmp);
                for i in 0..4 {
                    tmp[i] = r[i] + h * k3[i];
                }
                let k4 = rhs(tj + h, &tmp);
                for i in 0..4 {
                    r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            t = ts;
        }
        out.push(DensityMatrix {
            dim: 2,
            data: r.to_vec(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{beta_from_temperature_mk, gibbs_probabilities};
    use crate::problems::instances;
    use crate::schrodinger::{evolve_tdse, AnnealRun};

    #[test]
    fn rates_reproduce_equilibrium_ratios_at_final_time() {
        let spec = DissipationSpec::new(0.01, 6.93).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let t_a = 100_000.0;
        let g = rates_at(&spec, &p, &Schedule::standard(), &w, t_a, t_a).unwrap();
        assert_eq!(g[0], 0.01);
        assert_eq!(g[2], 0.01);
        assert_eq!(g[3], 0.01);
        assert_eq!(g[5], 0.01);
        // p_↓↓/p_↑↑ ≈ 0, p_↓↑/p_↑↑ = p_↑↓/p_↑↑ ≈ ½.
        assert!(g[1] < 1e-12);
        assert!((g[4] - 0.005).abs() < 1e-5, "γ5 = {}", g[4]);
        assert!((g[6] - 0.005).abs() < 1e-5);
    }

    #[test]
    fn infinite_temperature_rates_are_uniform() {
        let spec = DissipationSpec::new(0.003, 0.0).unwrap();
        let p = instances::s2_2();
        let g = rates_at(&spec, &p, &Schedule::standard(), &OnsetWindow::none(), 500.0, 1000.0)
            .unwrap();
        for &gi in &g {
            assert!((gi - 0.003).abs() < 1e-15);
        }
    }

    #[test]
    fn suppressed_fields_promote_escape_from_up_up() {
        // Before the window opens, B′ = 0 and the diagonal Hamiltonian of a
        // J > 0 instance has ↑↓, ↓↑ as degenerate ground states, so the
        // rates out of ↑↑ dominate c.
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_ns(600.0, 1200.0).unwrap();
        let g = rates_at(&spec, &p, &Schedule::standard(), &w, 500.0, 1200.0).unwrap();
        assert!((g[4] - g[6]).abs() < 1e-15, "symmetric instance");
        assert!(g[4] > 10.0 * spec.c, "γ5 = {} should dwarf c", g[4]);
        // ↓↓ and ↑↑ stay degenerate without fields, so γ₂ = c.
        assert!((g[1] - spec.c).abs() < 1e-15);
    }

    #[test]
    fn rates_satisfy_detailed_balance_pointwise() {
        let spec = DissipationSpec::new(0.005, 7.357).unwrap();
        let p = instances::s2_3();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let sched = Schedule::standard();
        let t_a = 5_000.0;
        let model = TwoSpinAnneal::new(&p, &sched, &w, t_a).unwrap();
        for t in [0.0, 137.0, 801.0, 2500.0, t_a] {
            let g = rates_at(&spec, &p, &sched, &w, t, t_a).unwrap();
            let e = model.scaled_energies(t).unwrap();
            let gibbs = crate::equilibrium::gibbs_from_energies(&e, spec.beta);
            assert!((g[1] * gibbs.get(0) - g[0] * gibbs.get(3)).abs() < 1e-12);
            assert!((g[4] * gibbs.get(0) - g[3] * gibbs.get(2)).abs() < 1e-12);
            assert!((g[6] * gibbs.get(0) - g[5] * gibbs.get(1)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_system_limit_matches_tdse() {
        let p = instances::s2_1();
        let sched = Schedule::standard();
        let w = OnsetWindow::none();
        let spec = DissipationSpec::new(0.0, 1.0).unwrap();
        let t_a = 10.0;

        let rho = evolve_lindblad(&p, &sched, &w, &spec, t_a, 2e-4).unwrap();
        let run = AnnealRun::new(p, sched, w, t_a, 1e-5).unwrap();
        let psi = evolve_tdse(&run).unwrap().populations();
        let diag = rho.diagonal_probabilities().unwrap();
        for k in 0..4 {
            assert!(
                (diag.get(k) - psi.get(k)).abs() < 1e-6,
                "k = {k}: {} vs {}",
                diag.get(k),
                psi.get(k)
            );
        }
    }

    #[test]
    fn gibbs_state_is_stationary_at_the_end_of_the_anneal() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let sched = Schedule::standard();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let t_a = 100_000.0;
        let model = TwoSpinAnneal::new(&p, &sched, &w, t_a).unwrap();

        let e = model.scaled_energies(t_a).unwrap();
        let gibbs = crate::equilibrium::gibbs_from_energies(&e, beta);
        let mut rho = [Complex64::new(0.0, 0.0); 16];
        for k in 0..4 {
            rho[k * 4 + k] = Complex64::new(gibbs.get(k), 0.0);
        }
        let (wa, d) = model.hamiltonian(t_a).unwrap();
        let rates = rates_from_energies(&spec, &e).unwrap();
        let mut deriv = [Complex64::new(0.0, 0.0); 16];
        rhs_two_spin(&rho, wa, &d, &rates, &mut deriv);
        assert!(frobenius16(&deriv) < 1e-10, "residual {}", frobenius16(&deriv));
    }

    #[test]
    fn thermalizes_to_gibbs_for_long_anneals() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let rho = evolve_lindblad(&p, &Schedule::standard(), &w, &spec, 50_000.0, DEFAULT_DT_NS)
            .unwrap();
        let diag = rho.diagonal_probabilities().unwrap();
        let gibbs = gibbs_probabilities(&p, beta).unwrap();
        for k in 0..4 {
            assert!(
                (diag.get(k) - gibbs.get(k)).abs() < 1e-3,
                "k = {k}: {} vs {}",
                diag.get(k),
                gibbs.get(k)
            );
        }
        // The 35 mK thermal point sits near the published long-time values.
        for (got, want) in diag.iter().zip([0.50, 0.25, 0.25, 0.0]) {
            assert!((got - want).abs() < 0.03, "{got} vs {want}");
        }
    }

    #[test]
    fn validity_checks_along_a_dip_run() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let t_a = 600.0;
        let times: Vec<f64> = (1..=20).map(|k| t_a * k as f64 / 20.0).collect();
        let samples = evolve_lindblad_sampled(
            &p,
            &Schedule::standard(),
            &w,
            &spec,
            t_a,
            DEFAULT_DT_NS,
            &times,
        )
        .unwrap();
        for (t, rho) in &samples {
            assert!((rho.trace() - 1.0).abs() < 1e-9, "trace at t = {t}");
            assert!(rho.hermiticity_error() < 1e-12, "hermiticity at t = {t}");
            assert!(rho.min_eigenvalue() > -1e-8, "positivity at t = {t}");
        }
        // The onset ramp holds the run back from the ↑↑ equilibrium value.
        let final_diag = samples.last().unwrap().1.diagonal_probabilities().unwrap();
        assert!(final_diag.get(0) < 0.1, "p_upup = {}", final_diag.get(0));
    }

    #[test]
    fn no_dip_without_onset_window() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let rho = evolve_lindblad(
            &p,
            &Schedule::standard(),
            &OnsetWindow::none(),
            &spec,
            600.0,
            DEFAULT_DT_NS,
        )
        .unwrap();
        let diag = rho.diagonal_probabilities().unwrap();
        assert!(diag.get(0) > 0.3, "p_upup = {}", diag.get(0));
    }

    #[test]
    fn coherences_decay_early() {
        let beta = beta_from_temperature_mk(35.0);
        let spec = DissipationSpec::new(0.01, beta).unwrap();
        let p = instances::s2_1();
        let w = OnsetWindow::from_us(0.0, 1.2).unwrap();
        let t_a = 10_000.0;
        // Coherences persist while the driver is on; they are gone well
        // before t_a, once A(s) has collapsed.
        let samples = evolve_lindblad_sampled(
            &p,
            &Schedule::standard(),
            &w,
            &spec,
            t_a,
            DEFAULT_DT_NS,
            &[0.85 * t_a, t_a],
        )
        .unwrap();
        for (t, rho) in &samples {
            assert!(rho.max_offdiagonal() < 1e-3, "coherence at t = {t}");
        }
    }

    #[test]
    fn two_level_pumping_reaches_rate_equilibrium() {
        // Static z-field, σ± rates only: Sᶻ must settle at (γ₁−γ₂)/(γ₁+γ₂).
        let rates = [0.02, 0.05, 0.0];
        let init = DensityMatrix::plus_state(1);
        let rho = evolve_two_level(|_| [0.0, 0.0, 1.0], rates, &init, 2_000.0, 0.005).unwrap();
        let sz = rho.get(0, 0).re - rho.get(1, 1).re;
        let m0 = (rates[0] - rates[1]) / (rates[0] + rates[1]);
        assert!((sz - m0).abs() < 1e-6, "Sz = {sz} vs M0 = {m0}");
        assert!((rho.trace() - 1.0).abs() < 1e-10);
    }
}
