//! Forward simulation of `u(t) = -Σ_k g0(k) rel(u)(t - Pd - k)`.
//!
//! Relay outputs before `t = 0` come from a seed history; anything earlier
//! than the seed is zero. Rational and geometric plants are stepped through
//! their difference equation, sample lists through direct convolution.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{PeriodicSignal, PlantSpec};
use crate::variation::{
    cyclic_diff, is_periodically_unimodal, relay_unchecked, s_cyclic_minus, s_cyclic_plus,
    SignPattern,
};

/// Default divergence cap as a multiple of `||g||_1`.
pub const DIVERGENCE_FACTOR: f64 = 1e3;
/// Default tolerance on `u` when confirming a period.
pub const DEFAULT_PERIOD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionPath {
    /// Whatever suits the plant kind.
    Auto,
    Recursion,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub path: ConvolutionPath,
    /// Abort when `|u(t)|` exceeds this; defaults to `1e3 ||g||_1`.
    pub divergence_cap: Option<f64>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { path: ConvolutionPath::Auto, divergence_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `u(t)` for `t = 0..horizon`.
    pub u: Vec<f64>,
    /// `rel(u(t))`.
    pub r: Vec<i8>,
    pub horizon: usize,
}

impl Trajectory {
    /// CSV with columns `t,u,r`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "r"])?;
        for (t, (u, r)) in self.u.iter().zip(&self.r).enumerate() {
            w.write_record([t.to_string(), crate::report::fmt_num(*u), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the closed loop for `steps` samples from relay history `seed`
/// (last entry is `r(-1)`). Needs `Pd >= 1`; without delay `u(t)` would
/// depend on `rel(u(t))` itself.
pub fn simulate(plant: &PlantSpec, seed: &[i8], steps: usize, opts: &SimulationOptions) -> Result<Trajectory> {
    if plant.delay == 0 {
        return Err(Error::Precondition(
            "simulation needs a delay of at least 1 (zero delay is an algebraic loop)".into(),
        ));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("number of steps must be positive".into()));
    }
    SignPattern::new(seed.to_vec())?;
    let (l1, l1_err) = plant.g0.l1_norm();
    let cap = opts.divergence_cap.unwrap_or(DIVERGENCE_FACTOR * (l1 + l1_err));
    let recursion = plant.g0.recursion();
    let use_recursion = match opts.path {
        ConvolutionPath::Auto => recursion.is_some(),
        ConvolutionPath::Recursion => {
            if recursion.is_none() {
                return Err(Error::InvalidInput("sample-list plants have no recursion".into()));
            }
            true
        }
        ConvolutionPath::Direct => false,
    };
    let pd = plant.delay;
    let hist = seed.len();
    // r and y share the index s + hist for time s >= -hist
    let total = hist + steps;
    let mut r: Vec<i8> = Vec::with_capacity(total);
    r.extend_from_slice(seed);
    let mut u = Vec::with_capacity(steps);

    if use_recursion {
        let (b, d) = recursion.expect("checked");
        let mut y: Vec<f64> = Vec::with_capacity(total);
        let y_at = |y: &Vec<f64>, r: &Vec<i8>, s: usize| -> f64 {
            let mut acc = 0.0;
            for (i, bi) in b.iter().enumerate() {
                if i <= s {
                    acc += bi * r[s - i] as f64;
                }
            }
            for (i, di) in d.iter().enumerate().skip(1) {
                if i <= s {
                    acc -= di * y[s - i];
                }
            }
            acc
        };
        // y over the seed window; the first `pd` outputs also only need the seed
        for s in 0..hist {
            let v = y_at(&y, &r, s);
            y.push(v);
        }
        for t in 0..steps {
            // u(t) = -y(t - pd)
            let idx = (t + hist) as i64 - pd as i64;
            let ut = if idx >= 0 { -y[idx as usize] } else { 0.0 };
            if !(ut.abs() <= cap) {
                return Err(Error::Divergence { t, value: ut, cap });
            }
            u.push(ut);
            r.push(relay_unchecked(ut, plant.chi0));
            let s = t + hist;
            let v = y_at(&y, &r, s);
            y.push(v);
        }
    } else {
        let (reach, _) = plant.g0.check_horizon(1e-15);
        let kernel: Vec<f64> = (0..reach.max(1).min(total + 1)).map(|k| plant.g0.value(k as i64)).collect();
        for t in 0..steps {
            let s = (t + hist) as i64 - pd as i64;
            let mut acc = 0.0;
            for (k, gk) in kernel.iter().enumerate() {
                let idx = s - k as i64;
                if idx < 0 {
                    break;
                }
                acc += gk * r[idx as usize] as f64;
            }
            let ut = -acc;
            if !(ut.abs() <= cap) {
                return Err(Error::Divergence { t, value: ut, cap });
            }
            u.push(ut);
            r.push(relay_unchecked(ut, plant.chi0));
        }
    }
    Ok(Trajectory { r: r[hist..].to_vec(), u, horizon: steps })
}

/// Simulates each seed independently in parallel.
pub fn simulate_many(plant: &PlantSpec, seeds: &[Vec<i8>], steps: usize, opts: &SimulationOptions) -> Vec<Result<Trajectory>> {
    seeds.par_iter().map(|s| simulate(plant, s, steps, opts)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub period: usize,
    /// Time offset (mod `period`) at which the canonical pattern starts.
    pub phase: usize,
    pub pattern: SignPattern,
    /// One period of `u` aligned with `pattern`.
    pub waveform: PeriodicSignal,
}

/// Smallest `P <= len/4` for which the relay sequence repeats exactly over
/// the trailing half of the trajectory and `u` repeats within `tol`.
pub fn detect_period(traj: &Trajectory, tol: f64) -> Option<SteadyState> {
    let len = traj.u.len();
    let start = len / 2;
    (1..=len / 4).find_map(|p| {
        let repeats = (start.max(p)..len).all(|t| traj.r[t] == traj.r[t - p] && (traj.u[t] - traj.u[t - p]).abs() <= tol);
        if !repeats {
            return None;
        }
        let t0 = len - p;
        let last = SignPattern::new(traj.r[t0..].to_vec()).expect("relay values");
        let (pattern, k) = last.canonical_with_shift();
        let begin = t0 + k;
        let waveform: Vec<f64> = (0..p).map(|i| traj.u[t0 + (k + i) % p]).collect();
        Some(SteadyState {
            period: p,
            phase: begin % p,
            pattern,
            waveform: PeriodicSignal::new(waveform).expect("finite"),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub is_self_oscillation: bool,
    pub satisfies_assumption2: bool,
    pub periodically_unimodal: bool,
    pub sign_symmetric: bool,
    pub pattern: SignPattern,
}

pub fn classify(u: &PeriodicSignal, chi0: f64) -> Result<Classification> {
    let pattern = crate::variation::relay_vec(u.values(), chi0)?;
    let diff_var = s_cyclic_minus(&cyclic_diff(u.values()));
    Ok(Classification {
        is_self_oscillation: diff_var >= 2,
        satisfies_assumption2: diff_var == 2 && s_cyclic_plus(pattern.entries()) == 2,
        periodically_unimodal: is_periodically_unimodal(u.values()).unwrap_or(false),
        sign_symmetric: pattern.counts().is_symmetric(),
        pattern,
    })
}

/// `pattern` repeated until at least `len` entries.
pub fn repeat_seed(pattern: &[i8], len: usize) -> Vec<i8> {
    if pattern.is_empty() {
        return Vec::new();
    }
    pattern.iter().copied().cycle().take(len.div_ceil(pattern.len()) * pattern.len()).collect()
}
