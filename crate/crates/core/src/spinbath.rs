//! Exact Schrödinger dynamics of the two-spin system coupled to a bath of
//! random spins: microscopic, non-Markovian decoherence with no hand-set
//! rates.
//!
//! The full Hamiltonian is ℋ(t) = H(t) + H_B + g·H_SB with the system anneal
//! H(t) as elsewhere, bath fields H_B = Σₙ Σ_α Ωₙ^α Iₙ^α, and couplings
//! H_SB = Σₙ Σₘ Σ_α Kₙₘ^α Iₙ^α σₘ^α between every bath spin n and both
//! system spins m. Bath operators are spin-1/2 (I = σ/2), and GHz-valued
//! couplings enter ℋ/ħ with a 2π, so every term carries a coefficient
//! π·(GHz value)·(Pauli product) in rad/ns, matching the system convention.
//!
//! The propagator is a second-order symmetric product formula. All σᶻ-only
//! terms (system diagonal, Ωᶻ fields, Kᶻ couplings) are applied as exact
//! phases; the rest (σˣ driver, Ωˣʸ fields, Kˣʸ couplings) is applied as a
//! palindromic product of exactly exponentiable one- and two-spin blocks, so
//! each factor is exactly unitary and the norm is conserved to rounding.
//!
//! # Reproducibility
//!
//! Randomness comes from two ChaCha12 streams of the run seed:
//! stream 0 draws the couplings Kₙₘ^α ~ U[−K, K] (n outer, m middle, α = x,
//! y, z inner) followed by the fields Ωₙ^α ~ U[−Ω, Ω] (n outer, α inner);
//! stream 1 draws the bath state amplitudes (standard complex Gaussians,
//! ascending basis index, real part before imaginary). Given the locked
//! dependency set, runs are bit-reproducible from (seed, N_B) on any
//! platform. [`RunManifest`] captures everything needed to replay a run.
//!
//! # State layout
//!
//! Amplitudes c(i, p) are stored as four system planes (i = ↑↑, ↑↓, ↓↑, ↓↓)
//! of 2^{N_B} bath amplitudes each, split into separate re/im arrays so the
//! sweeps vectorize. Bath spin n corresponds to bit n of p.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;
use crate::problems::IsingProblem;
use crate::schedule::{OnsetWindow, Schedule};

/// Largest supported bath.
pub const MAX_BATH_SPINS: usize = 20;

/// Bath size, coupling strengths, and the RNG seed of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub n_b: usize,
    /// Overall system–bath strength (dimensionless multiplier).
    pub g: f64,
    /// Coupling scale K in GHz.
    pub k: f64,
    /// Bath field scale Ω in GHz.
    pub omega: f64,
    pub seed: u64,
}

impl BathSpec {
    pub fn new(n_b: usize, g: f64, omega: f64, seed: u64) -> Result<Self> {
        Self::with_coupling_scale(n_b, g, 1.0, omega, seed)
    }

    pub fn with_coupling_scale(n_b: usize, g: f64, k: f64, omega: f64, seed: u64) -> Result<Self> {
        if n_b > MAX_BATH_SPINS {
            return Err(Error::InvalidParams(format!(
                "bath size {n_b} exceeds {MAX_BATH_SPINS}"
            )));
        }
        if !(g >= 0.0) || !(k >= 0.0) || !(omega >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "g, K, Ω must be ≥ 0 (got g = {g}, K = {k}, Ω = {omega})"
            )));
        }
        Ok(Self { n_b, g, k, omega, seed })
    }
}

/// Everything needed to replay a run bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub n_b: usize,
    pub g: f64,
    pub k_ghz: f64,
    pub omega_ghz: f64,
    pub dt_ns: f64,
    pub t_a_ns: f64,
    pub onset_start_ns: f64,
    pub onset_end_ns: f64,
}

impl RunManifest {
    pub fn new(bath: &BathSpec, window: &OnsetWindow, t_a_ns: f64, dt_ns: f64) -> Self {
        Self {
            seed: bath.seed,
            n_b: bath.n_b,
            g: bath.g,
            k_ghz: bath.k,
            omega_ghz: bath.omega,
            dt_ns,
            t_a_ns,
            onset_start_ns: window.start_ns(),
            onset_end_ns: window.end_ns(),
        }
    }

    pub fn bath_spec(&self) -> Result<BathSpec> {
        BathSpec::with_coupling_scale(self.n_b, self.g, self.k_ghz, self.omega_ghz, self.seed)
    }

    pub fn onset_window(&self) -> Result<OnsetWindow> {
        OnsetWindow::from_ns(self.onset_start_ns, self.onset_end_ns)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// System ⊗ bath state: four system planes of 2^{N_B} amplitudes.
#[derive(Debug, Clone)]
pub struct CompositeState {
    n_b: usize,
    re: [Vec<f64>; 4],
    im: [Vec<f64>; 4],
}

impl CompositeState {
    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.n_b
    }

    pub fn amplitude(&self, system_index: usize, bath_index: usize) -> Complex64 {
        Complex64::new(
            self.re[system_index][bath_index],
            self.im[system_index][bath_index],
        )
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for (r, m) in self.re[i].iter().zip(&self.im[i]) {
                s += r * r + m * m;
            }
        }
        s.sqrt()
    }

    /// Reduced system populations: the bath is traced out.
    pub fn reduced_populations(&self) -> [f64; 4] {
        let mut p = [0.0f64; 4];
        for i in 0..4 {
            for (r, m) in self.re[i].iter().zip(&self.im[i]) {
                p[i] += r * r + m * m;
            }
        }
        p
    }

    pub fn overlap(&self, other: &CompositeState) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for k in 0..self.re[i].len() {
                let a = Complex64::new(self.re[i][k], self.im[i][k]);
                let b = Complex64::new(other.re[i][k], other.im[i][k]);
                acc += a.conj() * b;
            }
        }
        acc
    }
}

/// |++⟩ ⊗ |Φ⟩ with |Φ⟩ a normalized bath state of independent standard
/// complex Gaussian amplitudes (ChaCha12 stream 1 of `seed`). An empty bath
/// gives exactly (½, ½, ½, ½).
pub fn init_state(n_b: usize, seed: u64) -> Result<CompositeState> {
    if n_b > MAX_BATH_SPINS {
        return Err(Error::InvalidParams(format!(
            "bath size {n_b} exceeds {MAX_BATH_SPINS}"
        )));
    }
    let dim = 1usize << n_b;
    let mut phi_re = vec![0.0f64; dim];
    let mut phi_im = vec![0.0f64; dim];
    if n_b == 0 {
        phi_re[0] = 1.0;
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut norm2 = 0.0;
        for k in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            phi_re[k] = re;
            phi_im[k] = im;
            norm2 += re * re + im * im;
        }
        let inv = norm2.sqrt().recip();
        phi_re.iter_mut().for_each(|v| *v *= inv);
        phi_im.iter_mut().for_each(|v| *v *= inv);
    }
    let re = std::array::from_fn(|_| phi_re.iter().map(|v| 0.5 * v).collect());
    let im = std::array::from_fn(|_| phi_im.iter().map(|v| 0.5 * v).collect());
    Ok(CompositeState { n_b, re, im })
}

/// Couplings of one bath realization (already scaled to rad/ns).
struct BathCouplings {
    /// π·g·K_{nm}^α, indexed [n][m][α].
    k: Vec<[[f64; 3]; 2]>,
    /// π·Ω_n^α, indexed [n][α].
    omega: Vec<[f64; 3]>,
}

fn draw_couplings(spec: &BathSpec) -> BathCouplings {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let pi = std::f64::consts::PI;
    let mut k = Vec::with_capacity(spec.n_b);
    for _ in 0..spec.n_b {
        let mut per_spin = [[0.0f64; 3]; 2];
        for per_m in per_spin.iter_mut() {
            for slot in per_m.iter_mut() {
                *slot = pi * spec.g * rng.gen_range(-spec.k..=spec.k);
            }
        }
        k.push(per_spin);
    }
    let mut omega = Vec::with_capacity(spec.n_b);
    for _ in 0..spec.n_b {
        let mut per_spin = [0.0f64; 3];
        for slot in per_spin.iter_mut() {
            *slot = pi * rng.gen_range(-spec.omega..=spec.omega);
        }
        omega.push(per_spin);
    }
    BathCouplings { k, omega }
}

/// e^{−iθ(n̂ˣσˣ + n̂ʸσʸ)} on one bath spin; c is real, the off-diagonals
/// complex.
#[derive(Clone, Copy)]
struct FieldRot {
    c: f64,
    w01: (f64, f64),
    w10: (f64, f64),
}

/// e^{−iτ(kˣσσ + kʸσσ)} factor: two pure-imaginary 2×2 blocks with angles
/// τ(kˣ−kʸ) on equal-bit pairs and τ(kˣ+kʸ) on opposite-bit pairs.
#[derive(Clone, Copy)]
struct PairRot {
    same: (f64, f64),
    diff: (f64, f64),
}

struct BathSpinFactors {
    field: Option<FieldRot>,
    pair: [Option<PairRot>; 2],
}

fn precompute_factors(coup: &BathCouplings, half_dt: f64) -> Vec<BathSpinFactors> {
    let mut out = Vec::with_capacity(coup.omega.len());
    for n in 0..coup.omega.len() {
        let [wx, wy, _wz] = coup.omega[n];
        let mag = (wx * wx + wy * wy).sqrt();
        let field = if mag > 0.0 {
            let theta = half_dt * mag;
            let (s, c) = theta.sin_cos();
            let (nx, ny) = (wx / mag, wy / mag);
            Some(FieldRot {
                c,
                w01: (-s * ny, -s * nx),
                w10: (s * ny, -s * nx),
            })
        } else {
            None
        };
        let pair = std::array::from_fn(|m| {
            let [kx, ky, _kz] = coup.k[n][m];
            if kx == 0.0 && ky == 0.0 {
                None
            } else {
                let (s_same, c_same) = (half_dt * (kx - ky)).sin_cos();
                let (s_diff, c_diff) = (half_dt * (kx + ky)).sin_cos();
                Some(PairRot {
                    same: (c_same, s_same),
                    diff: (c_diff, s_diff),
                })
            }
        });
        out.push(BathSpinFactors { field, pair });
    }
    out
}

/// Half-step diagonal phase tables e^{−i·(dt/2)·d(i, p)} for the
/// time-independent σᶻ terms (bath fields and z–z couplings).
struct PhaseTables {
    re: [Vec<f64>; 4],
    im: [Vec<f64>; 4],
}

fn precompute_phases(coup: &BathCouplings, n_b: usize, half_dt: f64) -> PhaseTables {
    let dim = 1usize << n_b;
    let mut re: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut im: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; dim]);
    for p in 0..dim {
        let mut bath = 0.0;
        let mut c0 = 0.0;
        let mut c1 = 0.0;
        for n in 0..n_b {
            let s = if (p >> n) & 1 == 0 { 1.0 } else { -1.0 };
            bath += coup.omega[n][2] * s;
            c0 += coup.k[n][0][2] * s;
            c1 += coup.k[n][1][2] * s;
        }
        for i in 0..4 {
            let s1 = if i < 2 { 1.0 } else { -1.0 };
            let s2 = if i % 2 == 0 { 1.0 } else { -1.0 };
            let theta = half_dt * (bath + s1 * c0 + s2 * c1);
            let (s_t, c_t) = theta.sin_cos();
            re[i][p] = c_t;
            im[i][p] = -s_t;
        }
    }
    PhaseTables { re, im }
}

#[inline(always)]
fn split_halves(v: &mut [f64], base: usize, sb: usize) -> (&mut [f64], &mut [f64]) {
    v[base..base + 2 * sb].split_at_mut(sb)
}

/// One bath-spin group: field rotation plus the two coupling factors, at
/// half-step angles; `mirrored` reverses the internal order.
///
/// Groups with every factor present run on lane-blocked straight-line
/// bodies; identity factors fall back to a generic body.
fn apply_bath_spin(state: &mut CompositeState, n: usize, f: &BathSpinFactors, mirrored: bool) {
    match (&f.field, &f.pair[0], &f.pair[1]) {
        (Some(fr), Some(p0), Some(p1)) => {
            let sb = 1usize << n;
            let dim = 1usize << state.n_b;
            let chunk = region_chunk(dim, 2 * sb);
            let [re0, re1, re2, re3] = &mut state.re;
            let [im0, im1, im2, im3] = &mut state.im;
            use rayon::prelude::*;
            re0.par_chunks_mut(chunk)
                .zip(re1.par_chunks_mut(chunk))
                .zip(re2.par_chunks_mut(chunk))
                .zip(re3.par_chunks_mut(chunk))
                .zip(im0.par_chunks_mut(chunk))
                .zip(im1.par_chunks_mut(chunk))
                .zip(im2.par_chunks_mut(chunk))
                .zip(im3.par_chunks_mut(chunk))
                .for_each(|(((((((r0, r1), r2), r3), i0), i1), i2), i3)| {
                    let mut planes = [r0, r1, r2, r3, i0, i1, i2, i3];
                    group_dispatch(&mut planes, sb, fr, p0, p1, mirrored);
                });
        }
        (None, None, None) => {}
        _ => generic_group(state, n, f, mirrored),
    }
}

fn group_dispatch(
    planes: &mut [&mut [f64]; 8],
    sb: usize,
    fr: &FieldRot,
    p0: &PairRot,
    p1: &PairRot,
    mirrored: bool,
) {
    if mirrored {
        pair_sweep(planes, sb, 1, p1);
        pair_sweep(planes, sb, 2, p0);
        field_sweep(planes, sb, fr);
    } else {
        field_sweep(planes, sb, fr);
        pair_sweep(planes, sb, 2, p0);
        pair_sweep(planes, sb, 1, p1);
    }
}

/// Region size for parallel passes: a multiple of the block period that
/// yields a few regions per worker, or the whole dimension when serial.
fn region_chunk(dim: usize, period: usize) -> usize {
    let threads = rayon::current_num_threads();
    if threads <= 1 || dim < (1 << 13) {
        return dim;
    }
    let target = dim.div_ceil(4 * threads);
    let rounded = target.div_ceil(period) * period;
    rounded.min(dim)
}

/// General 2×2 rotation (real diagonal, complex off-diagonals) applied
/// pointwise across equal-length slice pairs.
#[inline(always)]
fn grot_kernel(fr: &FieldRot, xr: &mut [f64], xi: &mut [f64], yr: &mut [f64], yi: &mut [f64]) {
    let (fc, w01r, w01i, w10r, w10i) = (fr.c, fr.w01.0, fr.w01.1, fr.w10.0, fr.w10.1);
    let n = xr.len();
    assert!(xi.len() == n && yr.len() == n && yi.len() == n);
    for k in 0..n {
        let (a, b, p, q) = (xr[k], xi[k], yr[k], yi[k]);
        xr[k] = fc.mul_add(a, w01r.mul_add(p, -(w01i * q)));
        xi[k] = fc.mul_add(b, w01r.mul_add(q, w01i * p));
        yr[k] = fc.mul_add(p, w10r.mul_add(a, -(w10i * b)));
        yi[k] = fc.mul_add(q, w10r.mul_add(b, w10i * a));
    }
}

/// Pure-imaginary 2×2 rotation x′ = c·x − i·s·y, pointwise across slices.
#[inline(always)]
fn imrot_kernel(c: f64, s: f64, xr: &mut [f64], xi: &mut [f64], yr: &mut [f64], yi: &mut [f64]) {
    let n = xr.len();
    assert!(xi.len() == n && yr.len() == n && yi.len() == n);
    for k in 0..n {
        let (a, b, p, q) = (xr[k], xi[k], yr[k], yi[k]);
        xr[k] = c.mul_add(a, s * q);
        xi[k] = c.mul_add(b, -(s * p));
        yr[k] = c.mul_add(p, s * b);
        yi[k] = c.mul_add(q, -(s * a));
    }
}

/// Short-stride variant: the (lo, hi) pairs sit inside one contiguous
/// 2·SB chunk, which keeps the loop flat and shuffle-vectorizable.
#[inline(always)]
fn grot_flat<const SB: usize>(fr: &FieldRot, re: &mut [f64], im: &mut [f64]) {
    let (fc, w01r, w01i, w10r, w10i) = (fr.c, fr.w01.0, fr.w01.1, fr.w10.0, fr.w10.1);
    for (rc, ic) in re.chunks_exact_mut(2 * SB).zip(im.chunks_exact_mut(2 * SB)) {
        for k in 0..SB {
            let (a, b, p, q) = (rc[k], ic[k], rc[k + SB], ic[k + SB]);
            rc[k] = fc.mul_add(a, w01r.mul_add(p, -(w01i * q)));
            ic[k] = fc.mul_add(b, w01r.mul_add(q, w01i * p));
            rc[k + SB] = fc.mul_add(p, w10r.mul_add(a, -(w10i * b)));
            ic[k + SB] = fc.mul_add(q, w10r.mul_add(b, w10i * a));
        }
    }
}

#[inline(always)]
fn imrot_flat<const SB: usize>(
    c: f64,
    s: f64,
    xside: (&mut [f64], &mut [f64]),
    yside: (&mut [f64], &mut [f64]),
) {
    // equal-bit pairs (x low half ↔ y high half) and opposite-bit pairs are
    // handled by the caller passing swapped halves.
    let (xr, xi) = xside;
    let (yr, yi) = yside;
    for (((xrc, xic), yrc), yic) in xr
        .chunks_exact_mut(2 * SB)
        .zip(xi.chunks_exact_mut(2 * SB))
        .zip(yr.chunks_exact_mut(2 * SB))
        .zip(yi.chunks_exact_mut(2 * SB))
    {
        for k in 0..SB {
            let (a, b, p, q) = (xrc[k], xic[k], yrc[k + SB], yic[k + SB]);
            xrc[k] = c.mul_add(a, s * q);
            xic[k] = c.mul_add(b, -(s * p));
            yrc[k + SB] = c.mul_add(p, s * b);
            yic[k + SB] = c.mul_add(q, -(s * a));
        }
    }
}

/// Field rotation on the bath bit, per plane.
fn field_sweep(planes: &mut [&mut [f64]; 8], sb: usize, fr: &FieldRot) {
    let (res, ims) = planes.split_at_mut(4);
    for plane in 0..4 {
        let re: &mut [f64] = res[plane];
        let im: &mut [f64] = ims[plane];
        match sb {
            1 => {
                grot_flat::<1>(fr, re, im);
                continue;
            }
            2 => {
                grot_flat::<2>(fr, re, im);
                continue;
            }
            4 => {
                grot_flat::<4>(fr, re, im);
                continue;
            }
            _ => {}
        }
        let len = re.len();
        let mut base = 0;
        while base < len {
            let (rl, rh) = split_halves(re, base, sb);
            let (il, ih) = split_halves(im, base, sb);
            grot_kernel(fr, rl, il, rh, ih);
            base += 2 * sb;
        }
    }
}

/// One coupling factor: pure-imaginary 2×2 blocks linking the bath bit to
/// the system plane bit (2 = system spin 1, 1 = system spin 2). Equal-bit
/// pairs rotate with `rot.same`, opposite-bit pairs with `rot.diff`; the two
/// act on disjoint amplitudes and commute.
fn pair_sweep(planes: &mut [&mut [f64]; 8], sb: usize, plane_bit: usize, rot: &PairRot) {
    let (sc, ss) = rot.same;
    let (dc, ds) = rot.diff;
    for lo_plane in 0..4 {
        if lo_plane & plane_bit != 0 {
            continue;
        }
        let hi_plane = lo_plane | plane_bit;
        let [ra, rb, ia, ib] = planes
            .get_disjoint_mut([lo_plane, hi_plane, 4 + lo_plane, 4 + hi_plane])
            .expect("distinct plane indices");
        match sb {
            // equal-bit pairs first, then opposite-bit with swapped halves
            1 => {
                imrot_flat::<1>(sc, ss, (ra, ia), (rb, ib));
                imrot_flat::<1>(dc, ds, (rb, ib), (ra, ia));
                continue;
            }
            2 => {
                imrot_flat::<2>(sc, ss, (ra, ia), (rb, ib));
                imrot_flat::<2>(dc, ds, (rb, ib), (ra, ia));
                continue;
            }
            4 => {
                imrot_flat::<4>(sc, ss, (ra, ia), (rb, ib));
                imrot_flat::<4>(dc, ds, (rb, ib), (ra, ia));
                continue;
            }
            _ => {}
        }
        let len = ra.len();
        let mut base = 0;
        while base < len {
            let (ral, rah) = split_halves(ra, base, sb);
            let (ial, iah) = split_halves(ia, base, sb);
            let (rbl, rbh) = split_halves(rb, base, sb);
            let (ibl, ibh) = split_halves(ib, base, sb);
            // equal-bit pair: (lo_plane, bath 0) ↔ (hi_plane, bath 1)
            imrot_kernel(sc, ss, ral, ial, rbh, ibh);
            // opposite-bit pair: (lo_plane, bath 1) ↔ (hi_plane, bath 0)
            imrot_kernel(dc, ds, rah, iah, rbl, ibl);
            base += 2 * sb;
        }
    }
}

/// Fallback for groups with some factors switched off (e.g. g = 0).
fn generic_group(state: &mut CompositeState, n: usize, f: &BathSpinFactors, mirrored: bool) {
    let sb = 1usize << n;
    let dim = 1usize << state.n_b;
    let [re0, re1, re2, re3] = &mut state.re;
    let [im0, im1, im2, im3] = &mut state.im;

    let mut base = 0;
    while base < dim {
        let (r0l, r0h) = split_halves(re0, base, sb);
        let (r1l, r1h) = split_halves(re1, base, sb);
        let (r2l, r2h) = split_halves(re2, base, sb);
        let (r3l, r3h) = split_halves(re3, base, sb);
        let (i0l, i0h) = split_halves(im0, base, sb);
        let (i1l, i1h) = split_halves(im1, base, sb);
        let (i2l, i2h) = split_halves(im2, base, sb);
        let (i3l, i3h) = split_halves(im3, base, sb);

        for k in 0..sb {
            let mut vr = [
                [r0l[k], r0h[k]],
                [r1l[k], r1h[k]],
                [r2l[k], r2h[k]],
                [r3l[k], r3h[k]],
            ];
            let mut vi = [
                [i0l[k], i0h[k]],
                [i1l[k], i1h[k]],
                [i2l[k], i2h[k]],
                [i3l[k], i3h[k]],
            ];

            let field = |vr: &mut [[f64; 2]; 4], vi: &mut [[f64; 2]; 4]| {
                if let Some(rot) = &f.field {
                    for plane in 0..4 {
                        let (xr, xi) = (vr[plane][0], vi[plane][0]);
                        let (yr, yi) = (vr[plane][1], vi[plane][1]);
                        vr[plane][0] = rot.c * xr + rot.w01.0 * yr - rot.w01.1 * yi;
                        vi[plane][0] = rot.c * xi + rot.w01.0 * yi + rot.w01.1 * yr;
                        vr[plane][1] = rot.c * yr + rot.w10.0 * xr - rot.w10.1 * xi;
                        vi[plane][1] = rot.c * yi + rot.w10.0 * xi + rot.w10.1 * xr;
                    }
                }
            };
            let pair = |vr: &mut [[f64; 2]; 4], vi: &mut [[f64; 2]; 4], m: usize| {
                if let Some(rot) = &f.pair[m] {
                    let plane_bit = if m == 0 { 2usize } else { 1 };
                    for lo_plane in 0..4 {
                        if lo_plane & plane_bit != 0 {
                            continue;
                        }
                        let hi_plane = lo_plane | plane_bit;
                        let (c, s) = rot.same;
                        let (xr, xi) = (vr[lo_plane][0], vi[lo_plane][0]);
                        let (yr, yi) = (vr[hi_plane][1], vi[hi_plane][1]);
                        vr[lo_plane][0] = c * xr + s * yi;
                        vi[lo_plane][0] = c * xi - s * yr;
                        vr[hi_plane][1] = c * yr + s * xi;
                        vi[hi_plane][1] = c * yi - s * xr;
                        let (c, s) = rot.diff;
                        let (xr, xi) = (vr[lo_plane][1], vi[lo_plane][1]);
                        let (yr, yi) = (vr[hi_plane][0], vi[hi_plane][0]);
                        vr[lo_plane][1] = c * xr + s * yi;
                        vi[lo_plane][1] = c * xi - s * yr;
                        vr[hi_plane][0] = c * yr + s * xi;
                        vi[hi_plane][0] = c * yi - s * xr;
                    }
                }
            };

            if mirrored {
                pair(&mut vr, &mut vi, 1);
                pair(&mut vr, &mut vi, 0);
                field(&mut vr, &mut vi);
            } else {
                field(&mut vr, &mut vi);
                pair(&mut vr, &mut vi, 0);
                pair(&mut vr, &mut vi, 1);
            }

            r0l[k] = vr[0][0];
            r0h[k] = vr[0][1];
            r1l[k] = vr[1][0];
            r1h[k] = vr[1][1];
            r2l[k] = vr[2][0];
            r2h[k] = vr[2][1];
            r3l[k] = vr[3][0];
            r3h[k] = vr[3][1];
            i0l[k] = vi[0][0];
            i0h[k] = vi[0][1];
            i1l[k] = vi[1][0];
            i1h[k] = vi[1][1];
            i2l[k] = vi[2][0];
            i2h[k] = vi[2][1];
            i3l[k] = vi[3][0];
            i3h[k] = vi[3][1];
        }
        base += 2 * sb;
    }
}

/// Diagonal phases (precomputed tables × per-step system phases) and the
/// σˣ driver rotations; `entering` applies phases before the driver.
fn apply_boundary(
    state: &mut CompositeState,
    tables: &PhaseTables,
    sys_phase: &[(f64, f64); 4],
    drv: (f64, f64),
    entering: bool,
) {
    let dim = 1usize << state.n_b;
    let chunk = region_chunk(dim, 4);
    let [re0, re1, re2, re3] = &mut state.re;
    let [im0, im1, im2, im3] = &mut state.im;
    let [tr0, tr1, tr2, tr3] = &tables.re;
    let [ti0, ti1, ti2, ti3] = &tables.im;
    use rayon::prelude::*;
    re0.par_chunks_mut(chunk)
        .zip(re1.par_chunks_mut(chunk))
        .zip(re2.par_chunks_mut(chunk))
        .zip(re3.par_chunks_mut(chunk))
        .zip(im0.par_chunks_mut(chunk))
        .zip(im1.par_chunks_mut(chunk))
        .zip(im2.par_chunks_mut(chunk))
        .zip(im3.par_chunks_mut(chunk))
        .zip(tr0.par_chunks(chunk))
        .zip(tr1.par_chunks(chunk))
        .zip(tr2.par_chunks(chunk))
        .zip(tr3.par_chunks(chunk))
        .zip(ti0.par_chunks(chunk))
        .zip(ti1.par_chunks(chunk))
        .zip(ti2.par_chunks(chunk))
        .zip(ti3.par_chunks(chunk))
        .for_each(
            |(
                (
                    (
                        ((((((((((((r0, r1), r2), r3), i0), i1), i2), i3), t0), t1), t2), t3),
                        u0,
                    ),
                    u1,
                ),
                u2,
            ), u3)| {
                let mut planes = [r0, r1, r2, r3, i0, i1, i2, i3];
                let tabs = [t0, t1, t2, t3, u0, u1, u2, u3];
                if entering {
                    boundary_dispatch::<true>(&mut planes, &tabs, sys_phase, drv);
                } else {
                    boundary_dispatch::<false>(&mut planes, &tabs, sys_phase, drv);
                }
            },
        );
}

/// Run `body` over L2-sized tiles of the state and phase tables in parallel.
/// Tile boundaries depend only on the dimensions, not the worker count.
fn for_each_tile<F>(state: &mut CompositeState, tables: &PhaseTables, tile: usize, body: F)
where
    F: Fn(&mut [&mut [f64]; 8], &[&[f64]; 8]) + Sync,
{
    let [re0, re1, re2, re3] = &mut state.re;
    let [im0, im1, im2, im3] = &mut state.im;
    let [tr0, tr1, tr2, tr3] = &tables.re;
    let [ti0, ti1, ti2, ti3] = &tables.im;
    use rayon::prelude::*;
    re0.par_chunks_mut(tile)
        .zip(re1.par_chunks_mut(tile))
        .zip(re2.par_chunks_mut(tile))
        .zip(re3.par_chunks_mut(tile))
        .zip(im0.par_chunks_mut(tile))
        .zip(im1.par_chunks_mut(tile))
        .zip(im2.par_chunks_mut(tile))
        .zip(im3.par_chunks_mut(tile))
        .zip(tr0.par_chunks(tile))
        .zip(tr1.par_chunks(tile))
        .zip(tr2.par_chunks(tile))
        .zip(tr3.par_chunks(tile))
        .zip(ti0.par_chunks(tile))
        .zip(ti1.par_chunks(tile))
        .zip(ti2.par_chunks(tile))
        .zip(ti3.par_chunks(tile))
        .for_each(
            |(
                (
                    (((((((((((((r0, r1), r2), r3), i0), i1), i2), i3), t0), t1), t2), t3), u0),
                    u1,
                ),
                u2,
            ), u3)| {
                let mut planes = [r0, r1, r2, r3, i0, i1, i2, i3];
                let tabs = [t0, t1, t2, t3, u0, u1, u2, u3];
                body(&mut planes, &tabs);
            },
        );
}

/// Bath bits resident in one tile; 2¹² bath states × 8 planes ≈ 256 KiB,
/// comfortably inside L2 together with the sliced phase tables.
const TILE_BITS: usize = 12;

/// One full symmetric step with cache tiling: the boundary factors and all
/// low-bit bath groups run per tile (state loaded once per segment), only
/// the high-bit groups sweep the whole state. The factor order is exactly
/// the untiled palindrome, so results are bitwise identical to it.
fn tiled_step(
    state: &mut CompositeState,
    tables: &PhaseTables,
    sys_phase: &[(f64, f64); 4],
    drv: (f64, f64),
    factors: &[BathSpinFactors],
) {
    let n_b = state.n_b;
    let t_bits = n_b.min(TILE_BITS);
    let tile = 1usize << t_bits;

    let unpack = |n: usize| -> (&FieldRot, &PairRot, &PairRot) {
        let f = &factors[n];
        match (&f.field, &f.pair[0], &f.pair[1]) {
            (Some(fr), Some(p0), Some(p1)) => (fr, p0, p1),
            _ => unreachable!("tiled path requires all factors"),
        }
    };

    // Head: phases + driver, then the low-bit groups forward.
    for_each_tile(state, tables, tile, |planes, tabs| {
        boundary_dispatch::<true>(planes, tabs, sys_phase, drv);
        for n in 0..t_bits {
            let (fr, p0, p1) = unpack(n);
            group_dispatch(planes, 1 << n, fr, p0, p1, false);
        }
    });
    // High-bit groups: both palindrome halves inside one resident pass.
    high_bits_pass(state, factors, t_bits);
    // Mirrored low-bit groups, then driver + phases.
    for_each_tile(state, tables, tile, |planes, tabs| {
        for n in (0..t_bits).rev() {
            let (fr, p0, p1) = unpack(n);
            group_dispatch(planes, 1 << n, fr, p0, p1, true);
        }
        boundary_dispatch::<false>(planes, tabs, sys_phase, drv);
    });
}

/// Column-block view used by [`high_bits_pass`]: for every plane, one
/// mutable slice per bath-bit row.
struct ColumnBlock<'a> {
    re: [Vec<&'a mut [f64]>; 4],
    im: [Vec<&'a mut [f64]>; 4],
}

/// Apply every bath-spin group with bit ≥ t_bits — the forward run and its
/// mirror — while holding narrow column blocks of all rows in cache. Blocks
/// are independent, so the pass parallelizes without reordering anything.
fn high_bits_pass(state: &mut CompositeState, factors: &[BathSpinFactors], t_bits: usize) {
    let n_b = state.n_b;
    if t_bits >= n_b {
        return;
    }
    let rows = 1usize << (n_b - t_bits);
    let cols = 1usize << t_bits;
    // rows × block × 8 planes × 8 B ≈ 256 KiB per resident block.
    let block = (4096 / rows).max(1).min(cols);
    let n_blocks = cols / block;

    // Pre-split every plane into (row, block) segments, then regroup them
    // by block so rayon tasks own disjoint slices.
    let mut tasks: Vec<ColumnBlock<'_>> = (0..n_blocks)
        .map(|_| ColumnBlock {
            re: std::array::from_fn(|_| Vec::with_capacity(rows)),
            im: std::array::from_fn(|_| Vec::with_capacity(rows)),
        })
        .collect();
    {
        let [r0, r1, r2, r3] = &mut state.re;
        let [i0, i1, i2, i3] = &mut state.im;
        let sources: [(usize, bool, &mut [f64]); 8] = [
            (0, false, r0),
            (1, false, r1),
            (2, false, r2),
            (3, false, r3),
            (0, true, i0),
            (1, true, i1),
            (2, true, i2),
            (3, true, i3),
        ];
        for (plane, is_im, arr) in sources {
            let mut rest: &mut [f64] = arr;
            for _row in 0..rows {
                for task in tasks.iter_mut() {
                    let (seg, tail) = rest.split_at_mut(block);
                    rest = tail;
                    if is_im {
                        task.im[plane].push(seg);
                    } else {
                        task.re[plane].push(seg);
                    }
                }
            }
        }
    }

    let unpack = |n: usize| -> (&FieldRot, &PairRot, &PairRot) {
        let f = &factors[n];
        match (&f.field, &f.pair[0], &f.pair[1]) {
            (Some(fr), Some(p0), Some(p1)) => (fr, p0, p1),
            _ => unreachable!("tiled path requires all factors"),
        }
    };

    use rayon::prelude::*;
    tasks.par_iter_mut().for_each(|task| {
        for n in t_bits..n_b {
            let (fr, p0, p1) = unpack(n);
            column_group(task, n - t_bits, fr, p0, p1, false);
        }
        for n in (t_bits..n_b).rev() {
            let (fr, p0, p1) = unpack(n);
            column_group(task, n - t_bits, fr, p0, p1, true);
        }
    });
}

/// One bath-spin group acting on the row bit `m` of a column block.
fn column_group(
    task: &mut ColumnBlock<'_>,
    m: usize,
    fr: &FieldRot,
    p0: &PairRot,
    p1: &PairRot,
    mirrored: bool,
) {
    let rows = task.re[0].len();
    let bit = 1usize << m;

    let field = |task: &mut ColumnBlock<'_>| {
        for plane in 0..4 {
            for j_lo in 0..rows {
                if j_lo & bit != 0 {
                    continue;
                }
                let j_hi = j_lo | bit;
                let [rl, rh] = task.re[plane]
                    .get_disjoint_mut([j_lo, j_hi])
                    .expect("distinct rows");
                let [il, ih] = task.im[plane]
                    .get_disjoint_mut([j_lo, j_hi])
                    .expect("distinct rows");
                grot_kernel(fr, rl, il, rh, ih);
            }
        }
    };
    let pair = |task: &mut ColumnBlock<'_>, plane_bit: usize, rot: &PairRot| {
        let (sc, ss) = rot.same;
        let (dc, ds) = rot.diff;
        for lo_plane in 0..4 {
            if lo_plane & plane_bit != 0 {
                continue;
            }
            let hi_plane = lo_plane | plane_bit;
            let [re_lo, re_hi] = task
                .re
                .get_disjoint_mut([lo_plane, hi_plane])
                .expect("distinct planes");
            let [im_lo, im_hi] = task
                .im
                .get_disjoint_mut([lo_plane, hi_plane])
                .expect("distinct planes");
            for j_lo in 0..rows {
                if j_lo & bit != 0 {
                    continue;
                }
                let j_hi = j_lo | bit;
                // equal bits: (lo_plane, row_lo) ↔ (hi_plane, row_hi)
                {
                    let [xr] = re_lo.get_disjoint_mut([j_lo]).expect("row");
                    let [xi] = im_lo.get_disjoint_mut([j_lo]).expect("row");
                    let [yr] = re_hi.get_disjoint_mut([j_hi]).expect("row");
                    let [yi] = im_hi.get_disjoint_mut([j_hi]).expect("row");
                    imrot_kernel(sc, ss, xr, xi, yr, yi);
                }
                // opposite bits: (lo_plane, row_hi) ↔ (hi_plane, row_lo)
                {
                    let [xr] = re_lo.get_disjoint_mut([j_hi]).expect("row");
                    let [xi] = im_lo.get_disjoint_mut([j_hi]).expect("row");
                    let [yr] = re_hi.get_disjoint_mut([j_lo]).expect("row");
                    let [yi] = im_hi.get_disjoint_mut([j_lo]).expect("row");
                    imrot_kernel(dc, ds, xr, xi, yr, yi);
                }
            }
        }
    };

    if mirrored {
        pair(task, 1, p1);
        pair(task, 2, p0);
        field(task);
    } else {
        field(task);
        pair(task, 2, p0);
        pair(task, 1, p1);
    }
}

fn boundary_dispatch<const ENTERING: bool>(
    planes: &mut [&mut [f64]; 8],
    tabs: &[&[f64]; 8],
    sys_phase: &[(f64, f64); 4],
    drv: (f64, f64),
) {
    if ENTERING {
        phase_sweep(planes, tabs, sys_phase);
        driver_sweep(planes, drv);
    } else {
        driver_sweep(planes, drv);
        phase_sweep(planes, tabs, sys_phase);
    }
}

/// Diagonal phases: per plane, amp ×= table(p) × sys(i).
fn phase_sweep(planes: &mut [&mut [f64]; 8], tabs: &[&[f64]; 8], sys_phase: &[(f64, f64); 4]) {
    let (res, ims) = planes.split_at_mut(4);
    for plane in 0..4 {
        let re: &mut [f64] = res[plane];
        let im: &mut [f64] = ims[plane];
        let tr = tabs[plane];
        let ti = tabs[4 + plane];
        let (sr, si) = sys_phase[plane];
        for k in 0..re.len() {
            let pr = tr[k].mul_add(sr, -(ti[k] * si));
            let pq = tr[k].mul_add(si, ti[k] * sr);
            let (a, b) = (re[k], im[k]);
            re[k] = a.mul_add(pr, -(b * pq));
            im[k] = a.mul_add(pq, b * pr);
        }
    }
}

/// Driver e^{+iθσˣ} on both system spins: x′ = c·x + i·s·y across the
/// plane pairs (0,2), (1,3) then (0,1), (2,3).
fn driver_sweep(planes: &mut [&mut [f64]; 8], (dc, ds): (f64, f64)) {
    if ds == 0.0 && dc == 1.0 {
        return;
    }
    for (a, b) in [(0usize, 2usize), (1, 3), (0, 1), (2, 3)] {
        let [ra, rb, ia, ib] = planes
            .get_disjoint_mut([a, b, 4 + a, 4 + b])
            .expect("distinct plane indices");
        for k in 0..ra.len() {
            let (x, y, p, q) = (ra[k], ia[k], rb[k], ib[k]);
            ra[k] = dc.mul_add(x, -(ds * q));
            ia[k] = dc.mul_add(y, ds * p);
            rb[k] = dc.mul_add(p, -(ds * y));
            ib[k] = dc.mul_add(q, ds * x);
        }
    }
}

struct SystemModel {
    h1: f64,
    h2: f64,
    j: f64,
}

impl SystemModel {
    fn new(problem: &IsingProblem) -> Result<Self> {
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
        })
    }

    /// (π·A, diagonal energies) of the system anneal at time t, rad/ns.
    fn coefficients(
        &self,
        schedule: &Schedule,
        window: &OnsetWindow,
        t_ns: f64,
        t_a_ns: f64,
    ) -> Result<(f64, [f64; 4])> {
        let t = t_ns.clamp(0.0, t_a_ns);
        let s = t / t_a_ns;
        let pi = std::f64::consts::PI;
        let a = schedule.eval_a(s)?;
        let b = schedule.eval_b(s)?;
        let bp = schedule.eval_b_prime(window, t, t_a_ns)?;
        let mut d = [0.0f64; 4];
        for (i, di) in d.iter_mut().enumerate() {
            let s1 = if i < 2 { 1.0 } else { -1.0 };
            let s2 = if i % 2 == 0 { 1.0 } else { -1.0 };
            *di = pi * (bp * (self.h1 * s1 + self.h2 * s2) + b * self.j * s1 * s2);
        }
        Ok((pi * a, d))
    }
}

/// Final reduced populations plus bookkeeping from one bath run.
#[derive(Debug, Clone)]
pub struct BathOutcome {
    pub populations: ProbabilityVector,
    pub norm_drift: f64,
    pub steps: u64,
}

/// Run the full system + bath anneal and return the reduced populations.
pub fn evolve_bath_tdse(
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    bath: &BathSpec,
    t_a_ns: f64,
    dt_ns: f64,
) -> Result<BathOutcome> {
    evolve_bath_tdse_observed(problem, schedule, window, bath, t_a_ns, dt_ns, &[], |_, _| {})
}

/// As [`evolve_bath_tdse`], invoking `observer` at each sample time
/// (ascending, within [0, t_a]; sampling lands on the nearest step boundary).
pub fn evolve_bath_tdse_observed(
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    bath: &BathSpec,
    t_a_ns: f64,
    dt_ns: f64,
    sample_times: &[f64],
    mut observer: impl FnMut(f64, &CompositeState),
) -> Result<BathOutcome> {
    if !(dt_ns > 0.0 && dt_ns <= t_a_ns) {
        return Err(Error::InvalidParams(format!(
            "need 0 < dt ≤ t_a, got dt = {dt_ns}, t_a = {t_a_ns}"
        )));
    }
    let model = SystemModel::new(problem)?;
    let coup = draw_couplings(bath);
    let mut state = init_state(bath.n_b, bath.seed)?;

    let steps = (t_a_ns / dt_ns).round().max(1.0) as u64;
    let dt = t_a_ns / steps as f64;
    let half_dt = 0.5 * dt;
    let factors = precompute_factors(&coup, half_dt);
    let tables = precompute_phases(&coup, bath.n_b, half_dt);
    let all_factors_present = factors
        .iter()
        .all(|f| f.field.is_some() && f.pair[0].is_some() && f.pair[1].is_some());

    let mut sample_iter = sample_times.iter().copied().peekable();
    let mut next_sample = sample_iter.next();
    if let Some(ts) = next_sample {
        if ts <= 0.0 {
            observer(0.0, &state);
            next_sample = sample_iter.next();
        }
    }

    let mut max_drift = 0.0f64;
    for j in 0..steps {
        let t_mid = (j as f64 + 0.5) * dt;
        let (wa, d) = model.coefficients(schedule, window, t_mid, t_a_ns)?;

        let theta_d = half_dt * wa;
        let drv = (theta_d.cos(), theta_d.sin());
        let sys_phase: [(f64, f64); 4] = std::array::from_fn(|i| {
            let theta = half_dt * d[i];
            (theta.cos(), -theta.sin())
        });

        if all_factors_present {
            tiled_step(&mut state, &tables, &sys_phase, drv, &factors);
        } else {
            apply_boundary(&mut state, &tables, &sys_phase, drv, true);
            for (n, f) in factors.iter().enumerate() {
                apply_bath_spin(&mut state, n, f, false);
            }
            for (n, f) in factors.iter().enumerate().rev() {
                apply_bath_spin(&mut state, n, f, true);
            }
            apply_boundary(&mut state, &tables, &sys_phase, drv, false);
        }

        let t_now = (j + 1) as f64 * dt;
        if j % 64 == 63 || j + 1 == steps {
            max_drift = max_drift.max((state.norm() - 1.0).abs());
        }
        while let Some(ts) = next_sample {
            if ts <= t_now + 0.5 * dt && (j + 1 < steps || ts <= t_a_ns * (1.0 + 1e-12)) {
                observer(t_now, &state);
                next_sample = sample_iter.next();
            } else {
                break;
            }
        }
    }

    if max_drift > 1e-6 {
        return Err(Error::IntegrationFailure(format!(
            "norm drift {max_drift:.3e} exceeds 1e-6"
        )));
    }

    let pops = state.reduced_populations();
    Ok(BathOutcome {
        populations: ProbabilityVector::new(pops.to_vec())?,
        norm_drift: max_drift,
        steps,
    })
}

/// ⟨ψ| H_sys(t) |ψ⟩ in rad/ns, with H_sys the annealed two-spin part only.
pub fn system_energy_expectation(
    state: &CompositeState,
    problem: &IsingProblem,
    schedule: &Schedule,
    window: &OnsetWindow,
    t_ns: f64,
    t_a_ns: f64,
) -> Result<f64> {
    let model = SystemModel::new(problem)?;
    let (wa, d) = model.coefficients(schedule, window, t_ns, t_a_ns)?;
    let pops = state.reduced_populations();
    let mut energy: f64 = (0..4).map(|i| d[i] * pops[i]).sum();

    // ⟨σ₁ˣ⟩ couples planes (0,2) and (1,3); ⟨σ₂ˣ⟩ couples (0,1) and (2,3).
    let mut sx = 0.0;
    for (a, b) in [(0usize, 2usize), (1, 3), (0, 1), (2, 3)] {
        for p in 0..state.bath_dim() {
            sx += 2.0 * (state.re[a][p] * state.re[b][p] + state.im[a][p] * state.im[b][p]);
        }
    }
    energy -= wa * sx;
    Ok(energy)
}
