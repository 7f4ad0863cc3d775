//! Annealing schedule functions A(s), B(s) and the onset-modified linear-term
//! schedule B′.
//!
//! Two fitted closed forms are built in, both returning GHz over s ∈ [0, 1]:
//!
//! Standard protocol:
//!
//! ```text
//! A(s) = (1−s)·exp(a₁ + a₂ s + a₃ s² + a₄ s³)
//! B(s) = b₁ + b₂ s + b₃ s²
//! ```
//!
//! Fast protocol:
//!
//! ```text
//! A(s) = exp( f₀(s)(c₁ + c₂ s + c₃ s³ + c₄ s⁴) + (1 − f₀(s))(c₅ + c₆ s) )
//! B(s) = exp( d₁ + d₂ (1−s) tanh(d₃ s^{3/2}) + d₄ tanh(d₅ s²) )
//! f₀(s) = ½(1 + tanh(a₀(b₀ − s)))
//! ```
//!
//! Users with their own schedule data can load two-column (s, GHz) tables
//! instead; see [`Schedule::tabulated`].
//!
//! The onset-modified linear-term schedule ramps the field term on over a
//! window in wall-clock time t (not s):
//!
//! ```text
//! B′(t) = 0                                            t ≤ t_start
//!       = sin(π/2 · (t − t_start)/(t_end − t_start)) · B(t/t_a)   inside
//!       = B(t/t_a)                                     t > t_end
//! ```

use std::path::Path;

use crate::error::{Error, Result};

/// Standard-protocol fit constants (A-exponent, then B-polynomial).
pub const STANDARD_A: [f64; 4] = [2.27, -8.22, 16.14, -27.59];
pub const STANDARD_B: [f64; 3] = [0.26, 2.46, 5.86];

/// Fast-protocol fit constants.
pub const FAST_C: [f64; 6] = [2.15, -2.66, -35.29, 143.48, 8.99, -30.63];
pub const FAST_D: [f64; 5] = [-1.21, -1.24, 4.79, 3.38, 5.87];
pub const FAST_A0: f64 = 5.00;
pub const FAST_B0: f64 = 0.40;

/// Slop accepted on s before declaring a domain error, so t/t_a rounding at
/// the endpoints does not trip the check.
const S_SLOP: f64 = 1e-9;

/// An annealing schedule: the pair of functions A(s), B(s) in GHz.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Standard,
    Fast,
    Tabulated { a: InterpTable, b: InterpTable },
}

impl Schedule {
    pub fn standard() -> Self {
        Schedule::Standard
    }

    pub fn fast() -> Self {
        Schedule::Fast
    }

    /// Schedule backed by two linearly interpolated (s, GHz) tables.
    pub fn tabulated(a: InterpTable, b: InterpTable) -> Self {
        Schedule::Tabulated { a, b }
    }

    /// Load a tabulated schedule from two two-column text files.
    pub fn from_table_files(a_path: impl AsRef<Path>, b_path: impl AsRef<Path>) -> Result<Self> {
        Ok(Schedule::Tabulated {
            a: InterpTable::load(a_path)?,
            b: InterpTable::load(b_path)?,
        })
    }

    fn check_domain(s: f64) -> Result<f64> {
        if !(-S_SLOP..=1.0 + S_SLOP).contains(&s) {
            return Err(Error::InvalidSchedule(format!("s = {s} outside [0, 1]")));
        }
        Ok(s.clamp(0.0, 1.0))
    }

    /// Transverse-field coefficient A(s) in GHz.
    pub fn eval_a(&self, s: f64) -> Result<f64> {
        let s = Self::check_domain(s)?;
        Ok(match self {
            Schedule::Standard => {
                let [a1, a2, a3, a4] = STANDARD_A;
                (1.0 - s) * (a1 + a2 * s + a3 * s * s + a4 * s * s * s).exp()
            }
            Schedule::Fast => {
                let [c1, c2, c3, c4, c5, c6] = FAST_C;
                let f0 = 0.5 * (1.0 + (FAST_A0 * (FAST_B0 - s)).tanh());
                let g1 = c1 + c2 * s + c3 * s.powi(3) + c4 * s.powi(4);
                let g2 = c5 + c6 * s;
                (f0 * g1 + (1.0 - f0) * g2).exp()
            }
            Schedule::Tabulated { a, .. } => a.eval(s)?,
        })
    }

    /// Problem-Hamiltonian coefficient B(s) in GHz.
    pub fn eval_b(&self, s: f64) -> Result<f64> {
        let s = Self::check_domain(s)?;
        Ok(match self {
            Schedule::Standard => {
                let [b1, b2, b3] = STANDARD_B;
                b1 + b2 * s + b3 * s * s
            }
            Schedule::Fast => {
                let [d1, d2, d3, d4] = [FAST_D[0], FAST_D[1], FAST_D[2], FAST_D[3]];
                let d5 = FAST_D[4];
                (d1 + d2 * (1.0 - s) * (d3 * s.powf(1.5)).tanh() + d4 * (d5 * s * s).tanh()).exp()
            }
            Schedule::Tabulated { b, .. } => b.eval(s)?,
        })
    }

    /// Onset-modified linear-term coefficient B′ at wall-clock time `t_ns`
    /// of a `t_a_ns`-long anneal, in GHz.
    ///
    /// A degenerate window (t_start == t_end) acts as a step from 0 to B at
    /// t_start.
    pub fn eval_b_prime(&self, window: &OnsetWindow, t_ns: f64, t_a_ns: f64) -> Result<f64> {
        if !(t_ns >= -1e-12 && t_ns <= t_a_ns * (1.0 + S_SLOP)) {
            return Err(Error::InvalidSchedule(format!(
                "t = {t_ns} ns outside [0, {t_a_ns}] ns"
            )));
        }
        let b = self.eval_b(t_ns / t_a_ns)?;
        let (start, end) = (window.start_ns(), window.end_ns());
        Ok(if t_ns <= start {
            0.0
        } else if t_ns <= end {
            let ramp = (std::f64::consts::FRAC_PI_2 * (t_ns - start) / (end - start)).sin();
            ramp * b
        } else {
            b
        })
    }

    /// Max over s of max(A, B·h_scale); the coefficient scale in GHz used for
    /// flux-bias validation and step-size control.
    pub fn max_coefficient(&self, h_scale: f64) -> f64 {
        const SAMPLES: usize = 2000;
        let mut m: f64 = 0.0;
        for k in 0..=SAMPLES {
            let s = k as f64 / SAMPLES as f64;
            let a = self.eval_a(s).unwrap_or(0.0);
            let b = self.eval_b(s).unwrap_or(0.0);
            m = m.max(a.max(b * h_scale));
        }
        m
    }
}

/// Time window over which B′ ramps from 0 up to B, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetWindow {
    start_ns: f64,
    end_ns: f64,
}

impl OnsetWindow {
    pub fn from_ns(start_ns: f64, end_ns: f64) -> Result<Self> {
        if !(start_ns >= 0.0 && end_ns >= start_ns) {
            return Err(Error::InvalidParams(format!(
                "onset window ({start_ns}, {end_ns}) ns must satisfy 0 ≤ start ≤ end"
            )));
        }
        Ok(Self { start_ns, end_ns })
    }

    pub fn from_us(start_us: f64, end_us: f64) -> Result<Self> {
        Self::from_ns(start_us * 1e3, end_us * 1e3)
    }

    /// The trivial window (0, 0): B′ equals B for every t > 0.
    pub fn none() -> Self {
        Self {
            start_ns: 0.0,
            end_ns: 0.0,
        }
    }

    pub fn start_ns(&self) -> f64 {
        self.start_ns
    }

    pub fn end_ns(&self) -> f64 {
        self.end_ns
    }
}

/// A sorted two-column table with linear interpolation, covering [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct InterpTable {
    points: Vec<(f64, f64)>,
}

impl InterpTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSchedule("table needs at least two points".into()));
        }
        if points
            .windows(2)
            .any(|w| !(w[1].0 > w[0].0) || !w[0].0.is_finite())
        {
            return Err(Error::InvalidSchedule(
                "table abscissae must be finite and strictly increasing".into(),
            ));
        }
        if points.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSchedule("table values must be finite".into()));
        }
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        if first > 0.0 || last < 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "table domain [{first}, {last}] must cover [0, 1]"
            )));
        }
        Ok(Self { points })
    }

    /// Parse lines of `s value` or `s,value`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty());
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| Error::Parse(format!("line {}: missing column", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let s = parse(cols.next())?;
            let v = parse(cols.next())?;
            points.push((s, v));
        }
        Self::new(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        let pts = &self.points;
        if s < pts[0].0 || s > pts[pts.len() - 1].0 {
            return Err(Error::InvalidSchedule(format!("s = {s} outside table domain")));
        }
        let hi = pts.partition_point(|&(x, _)| x < s).min(pts.len() - 1).max(1);
        let (x0, y0) = pts[hi - 1];
        let (x1, y1) = pts[hi];
        Ok(y0 + (y1 - y0) * (s - x0) / (x1 - x0))
    }
}
