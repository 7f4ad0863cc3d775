//! A numerical laboratory for the annealing-time dependence of state-sampling
//! statistics in small transverse-field Ising systems.
//!
//! The library simulates the anneal
//!
//! ```text
//! H(t)/ħ = −π·A(s)·Σᵢ σᵢˣ + π·B(s)·( Σᵢ hᵢ σᵢᶻ + Σ_{i>j} J_ij σᵢᶻ σⱼᶻ ),   s = t/t_a,
//! ```
//!
//! under five dynamical models, together with the equilibrium analysis needed
//! to compare sampled frequencies against theory:
//!
//! * [`schrodinger`] — ideal closed-system dynamics (product-formula TDSE),
//! * [`bloch`] — one-spin relaxation dynamics with T₁/T₂/M₀,
//! * [`lindblad`] — two-spin GKSL master equation with detailed-balance rates,
//! * [`markov`] — the classical rate-matrix reduction of the same model,
//! * [`spinbath`] — two spins coupled to a random spin bath, solved exactly,
//! * [`equilibrium`] — Gibbs distributions, chain energies, β fitting,
//! * [`extraction`] — maximum-entropy recovery of (h₁, h₂, J, β) from samples.
//!
//! # Units
//!
//! Time is in nanoseconds, schedule values A(s), B(s) in GHz, and the
//! Hamiltonian coefficients entering every integrator are `π·A(s)` and
//! `π·B(s)` in rad/ns. Microsecond inputs are converted at the API boundary.
//!
//! # Basis indexing
//!
//! Computational basis states map to indices with spin 1 as the most
//! significant bit: for two spins (↑↑, ↑↓, ↓↑, ↓↓) ↔ (0, 1, 2, 3). See
//! [`problems::SpinConfiguration`].

pub mod bloch;
pub mod equilibrium;
pub mod error;
pub mod extraction;
pub mod linalg;
pub mod lindblad;
pub mod markov;
pub mod prob;
pub mod problems;
pub mod schedule;
pub mod schrodinger;
pub mod spinbath;

pub use error::{Error, Result};
pub use prob::ProbabilityVector;
pub use problems::{EmbeddedProblem, IsingProblem, SpinConfiguration};
pub use schedule::{OnsetWindow, Schedule};
