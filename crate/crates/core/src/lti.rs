//! Causal SISO impulse responses and the periodic-convolution algebra that
//! turns the relay loop into a circulant fixed-point equation.
//!
//! A P-periodic input passed through `g` produces a P-periodic output whose
//! single period is `H_{ḡ^P} u^P`, where `ḡ^P` is the periodic summation of
//! `g` and `H_v` the circulant matrix with first column `v`. With a pure delay
//! `Pd` factored out of the plant the loop map over one period reads
//! `u^P = -Q_P^{Pd} H_{ḡ0^P} rel(u^P)`.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variation::{check_dead_zone, SignPattern};

/// Poles with modulus above `1 - STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// Default certified tolerance for periodic summation.
pub const DEFAULT_SUMMATION_TOL: f64 = 1e-12;
/// Tail level below which property checks stop scanning samples.
pub const CHECK_HORIZON_TAIL: f64 = 1e-12;

const MAX_CACHE: usize = 1 << 20;
const MAX_SUMMATION_TERMS: usize = 10_000_000;

/// One period of a real P-periodic sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeriodicSignal(Vec<f64>);

impl PeriodicSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("periodic signal must be nonempty".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("periodic signal entries must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn period(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Serializable description of an impulse response; also the `plant` object
/// of the plant-spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ImpulseSpec {
    /// `g(t) = gain · a^t`.
    Geometric {
        a: f64,
        #[serde(default = "unit_gain")]
        gain: f64,
    },
    /// `G(z) = num(z) / den(z)`, coefficients in descending powers of `z`.
    Rational { num: Vec<f64>, den: Vec<f64> },
    /// Finite list of samples followed by zeros.
    Samples { values: Vec<f64> },
}

fn unit_gain() -> f64 {
    1.0
}

/// How the infinite tail of an impulse response is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    /// Finite support: every sample was inspected.
    Exact,
    /// The kind guarantees the property beyond the checked horizon
    /// (geometric, or rational with a positive real dominant pole).
    Guaranteed,
    /// Nothing can be said beyond the horizon.
    Undecidable,
}

#[derive(Debug, Clone)]
struct RationalResponse {
    num: Vec<f64>,
    den: Vec<f64>,
    poles: Vec<Complex<f64>>,
    /// `|g(t)| <= bound_scale · ||state(t0)||_inf · rho^(t - t0)` for `t >= t0`.
    bound_scale: f64,
    rho: f64,
    samples: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Repr {
    Geometric { a: f64, gain: f64 },
    Rational(Box<RationalResponse>),
    Samples { values: Vec<f64>, suffix_abs: Vec<f64> },
}

/// Causal, absolutely summable impulse response with a certified tail bound.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    repr: Repr,
}

impl ImpulseResponse {
    pub fn geometric(a: f64, gain: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidInput(format!("geometric ratio must lie in (0, 1), got {a}")));
        }
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidInput(format!("geometric gain must be positive, got {gain}")));
        }
        Ok(Self { repr: Repr::Geometric { a, gain } })
    }

    pub fn samples(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        let mut values = values;
        while values.last() == Some(&0.0) {
            values.pop();
        }
        let mut suffix_abs = vec![0.0; values.len() + 1];
        for i in (0..values.len()).rev() {
            suffix_abs[i] = suffix_abs[i + 1] + values[i].abs();
        }
        Ok(Self { repr: Repr::Samples { values, suffix_abs } })
    }

    /// Unit pulse `δ(t)`.
    pub fn unit_pulse() -> Self {
        Self::samples(vec![1.0]).expect("finite")
    }

    /// Impulse response of `num(z)/den(z)` (descending powers of `z`).
    pub fn rational(num: &[f64], den: &[f64]) -> Result<Self> {
        impulse_from_rational(num, den)
    }

    /// Parallel first-order lags `Σ k_i z / (z - p_i)`.
    pub fn parallel_lags(lags: &[(f64, f64)]) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidInput("need at least one lag".into()));
        }
        let mut den = vec![1.0];
        for &(_, p) in lags {
            den = poly_mul(&den, &[1.0, -p]);
        }
        let mut num = vec![0.0; den.len()];
        for (i, &(k, _)) in lags.iter().enumerate() {
            let mut term = vec![k, 0.0];
            for (j, &(_, p)) in lags.iter().enumerate() {
                if i != j {
                    term = poly_mul(&term, &[1.0, -p]);
                }
            }
            let off = num.len() - term.len();
            for (a, b) in num[off..].iter_mut().zip(&term) {
                *a += b;
            }
        }
        Self::rational(&num, &den)
    }

    pub fn from_spec(spec: &ImpulseSpec) -> Result<Self> {
        match spec {
            ImpulseSpec::Geometric { a, gain } => Self::geometric(*a, *gain),
            ImpulseSpec::Rational { num, den } => Self::rational(num, den),
            ImpulseSpec::Samples { values } => Self::samples(values.clone()),
        }
    }

    pub fn to_spec(&self) -> ImpulseSpec {
        match &self.repr {
            Repr::Geometric { a, gain } => ImpulseSpec::Geometric { a: *a, gain: *gain },
            Repr::Rational(r) => ImpulseSpec::Rational { num: r.num.clone(), den: r.den.clone() },
            Repr::Samples { values, .. } => ImpulseSpec::Samples { values: values.clone() },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.repr {
            Repr::Geometric { .. } => "geometric",
            Repr::Rational(_) => "rational",
            Repr::Samples { .. } => "samples",
        }
    }

    /// `g(t)`; zero for negative `t`.
    pub fn value(&self, t: i64) -> f64 {
        if t < 0 {
            return 0.0;
        }
        let t = t as usize;
        match &self.repr {
            Repr::Geometric { a, gain } => gain * a.powi(t.min(i32::MAX as usize) as i32),
            Repr::Samples { values, .. } => values.get(t).copied().unwrap_or(0.0),
            Repr::Rational(r) => r.value(t),
        }
    }

    /// Upper bound on `Σ_{k >= t} |g(k)|`.
    pub fn tail_bound(&self, t: usize) -> f64 {
        match &self.repr {
            Repr::Geometric { a, gain } => gain * a.powi(t.min(i32::MAX as usize) as i32) / (1.0 - a),
            Repr::Samples { suffix_abs, .. } => suffix_abs.get(t).copied().unwrap_or(0.0),
            Repr::Rational(r) => r.tail_bound(t),
        }
    }

    /// Estimate of `||g||_1` and a certified bound on its error.
    pub fn l1_norm(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Geometric { a, gain } => (gain / (1.0 - a), 0.0),
            Repr::Samples { suffix_abs, .. } => (suffix_abs[0], 0.0),
            Repr::Rational(r) => {
                let h = r.samples.len();
                let s: f64 = r.samples.iter().map(|x| x.abs()).sum();
                (s, r.tail_bound(h))
            }
        }
    }

    /// Sum of samples `Σ_{k>=t} g(k)` with a certified error bound.
    pub fn tail_sum(&self, t: usize) -> (f64, f64) {
        match &self.repr {
            Repr::Geometric { a, gain } => (gain * a.powi(t as i32) / (1.0 - a), 0.0),
            Repr::Samples { values, .. } => (values.iter().skip(t).sum(), 0.0),
            Repr::Rational(r) => {
                let h = r.samples.len().max(t);
                let s: f64 = (t..h).map(|k| r.value(k)).sum();
                (s, r.tail_bound(h))
            }
        }
    }

    /// First index past which the tail bound is below `level`, together with
    /// what the kind guarantees beyond it.
    pub fn check_horizon(&self, level: f64) -> (usize, TailStatus) {
        match &self.repr {
            Repr::Samples { values, .. } => (values.len(), TailStatus::Exact),
            Repr::Geometric { a, gain } => {
                let mut t = 0usize;
                while gain * a.powi(t as i32) / (1.0 - a) >= level && t < MAX_CACHE {
                    t += 1;
                }
                (t, TailStatus::Guaranteed)
            }
            Repr::Rational(r) => {
                let mut t = 0usize;
                while r.tail_bound(t) >= level && t < MAX_CACHE {
                    t += 1;
                }
                let status = if r.dominant_pole_positive_real() {
                    TailStatus::Guaranteed
                } else {
                    TailStatus::Undecidable
                };
                (t, status)
            }
        }
    }

    /// Difference-equation coefficients `(b, d)` with `d[0] = 1` such that
    /// `y(t) = Σ_i b_i x(t-i) - Σ_{i>=1} d_i y(t-i)`; `None` for sample lists.
    pub fn recursion(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.repr {
            Repr::Geometric { a, gain } => Some((vec![*gain, 0.0], vec![1.0, -a])),
            Repr::Rational(r) => {
                let n = r.order();
                let mut b = vec![0.0; n + 1 - r.num.len()];
                b.extend_from_slice(&r.num);
                Some((b, r.den.clone()))
            }
            Repr::Samples { .. } => None,
        }
    }

    /// Poles of a rational response (empty for other kinds).
    pub fn poles(&self) -> Vec<Complex<f64>> {
        match &self.repr {
            Repr::Rational(r) => r.poles.clone(),
            _ => Vec::new(),
        }
    }
}

impl RationalResponse {
    fn order(&self) -> usize {
        self.den.len() - 1
    }

    fn value(&self, t: usize) -> f64 {
        if let Some(&v) = self.samples.get(t) {
            return v;
        }
        // continue the homogeneous recurrence from the cached end
        let n = self.order();
        let mut hist: Vec<f64> = self.samples[self.samples.len() - n..].to_vec();
        let mut cur = self.samples.len();
        loop {
            let next: f64 = -(1..=n).map(|i| self.den[i] * hist[n - i]).sum::<f64>();
            if cur == t {
                return next;
            }
            hist.remove(0);
            hist.push(next);
            cur += 1;
        }
    }

    fn tail_bound(&self, t: usize) -> f64 {
        let n = self.order();
        if n == 0 {
            return if t == 0 { self.num[0].abs() } else { 0.0 };
        }
        let t0 = n.max(t);
        // |g(k)| <= scale · ||s(t0)|| · rho^(k - t0) for k >= t0
        let state_norm = (0..n)
            .map(|i| self.value(t0 - i).abs())
            .fold(0.0f64, f64::max);
        let geometric_tail = self.bound_scale * state_norm / (1.0 - self.rho);
        let head: f64 = (t..t0).map(|k| self.value(k).abs()).sum();
        head + geometric_tail
    }

    fn dominant_pole_positive_real(&self) -> bool {
        let r_max = self.poles.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        if r_max == 0.0 {
            return true;
        }
        self.poles
            .iter()
            .filter(|p| p.norm() > r_max - 1e-6)
            .all(|p| (p - Complex::new(r_max, 0.0)).norm() < 1e-6)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn strip_leading_zeros(c: &[f64]) -> Vec<f64> {
    c.iter().copied().skip_while(|&x| x == 0.0).collect()
}

fn companion(den: &[f64]) -> DMatrix<f64> {
    let n = den.len() - 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    a
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Impulse response of a rational transfer function via its difference
/// equation, with a tail bound certified from the companion matrix.
pub fn impulse_from_rational(num: &[f64], den: &[f64]) -> Result<ImpulseResponse> {
    if num.iter().chain(den).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("coefficients must be finite".into()));
    }
    let num = strip_leading_zeros(num);
    let den = strip_leading_zeros(den);
    if den.is_empty() {
        return Err(Error::InvalidInput("denominator is identically zero".into()));
    }
    if num.is_empty() {
        return Err(Error::ZeroResponse);
    }
    if num.len() > den.len() {
        return Err(Error::InvalidInput(
            "numerator degree exceeds denominator degree (non-causal)".into(),
        ));
    }
    let lead = den[0];
    let den: Vec<f64> = den.iter().map(|x| x / lead).collect();
    let n = den.len() - 1;
    // pad numerator to n + 1 coefficients: b_0 z^n + ... + b_n
    let mut b = vec![0.0; n + 1 - num.len()];
    b.extend(num.iter().map(|x| x / lead));

    let poles: Vec<Complex<f64>> = if n == 0 {
        Vec::new()
    } else {
        companion(&den).complex_eigenvalues().iter().copied().collect()
    };
    let r_max = poles.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    if r_max > 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstablePoles { poles, margin: STABILITY_MARGIN });
    }

    // ||(A/rho)^k|| <= scale for every k >= 0
    let rho = 0.5 * (1.0 + r_max);
    let mut bound_scale = 1.0f64;
    if n > 0 {
        let m = companion(&den) / rho;
        let mut power = DMatrix::<f64>::identity(n, n);
        let mut converged = false;
        for _ in 0..MAX_CACHE {
            power = &m * &power;
            let norm = inf_norm(&power);
            if norm <= 0.5 {
                converged = true;
                break;
            }
            bound_scale = bound_scale.max(norm);
        }
        if !converged {
            return Err(Error::Undecidable(
                "could not certify a decay envelope for the denominator".into(),
            ));
        }
    }

    let mut rr = RationalResponse {
        num: num.iter().map(|x| x / lead).collect(),
        den: den.clone(),
        poles,
        bound_scale,
        rho,
        samples: Vec::new(),
    };
    // g(t) = b_t - Σ_{i=1..n} d_i g(t - i)
    let mut samples: Vec<f64> = Vec::new();
    for t in 0..=n {
        let forced = b[t];
        let fb: f64 = (1..=n.min(t)).map(|i| den[i] * samples[t - i]).sum();
        samples.push(forced - fb);
    }
    rr.samples = samples;
    if samples_all_zero(&rr.samples) {
        return Err(Error::ZeroResponse);
    }
    while rr.samples.len() < MAX_CACHE {
        let t = rr.samples.len();
        if n == 0 || rr.tail_bound(t - 1) < 1e-18 * (1.0 + rr.samples[..].iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            break;
        }
        let next: f64 = -(1..=n).map(|i| den[i] * rr.samples[t - i]).sum::<f64>();
        rr.samples.push(next);
    }
    Ok(ImpulseResponse { repr: Repr::Rational(Box::new(rr)) })
}

fn samples_all_zero(s: &[f64]) -> bool {
    s.iter().all(|&x| x == 0.0)
}

/// Index of the first nonzero sample.
pub fn relative_degree(g: &ImpulseResponse) -> Result<usize> {
    match &g.repr {
        Repr::Geometric { .. } => Ok(0),
        Repr::Samples { values, .. } => values.iter().position(|&x| x != 0.0).ok_or(Error::ZeroResponse),
        Repr::Rational(r) => Ok(r.den.len() - r.num.len()),
    }
}

/// Splits `g(t) = g0(t - Pd)` with `g0(0) != 0`.
pub fn factor_delay(g: &ImpulseResponse) -> Result<(usize, ImpulseResponse)> {
    let pd = relative_degree(g)?;
    let g0 = match &g.repr {
        Repr::Geometric { .. } => g.clone(),
        Repr::Samples { values, .. } => ImpulseResponse::samples(values[pd..].to_vec())?,
        Repr::Rational(r) => {
            let mut num = r.num.clone();
            num.extend(std::iter::repeat_n(0.0, pd));
            impulse_from_rational(&num, &r.den)?
        }
    };
    Ok((pd, g0))
}

/// Outcome of checking summability, connected support and strict decrease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Verdict {
    pub l1_summable: bool,
    pub support_connected: bool,
    pub strictly_decreasing: bool,
    pub strictly_positive: bool,
    /// Samples inspected: `[support_start, horizon)`.
    pub horizon: usize,
    pub tail: TailStatus,
    /// First index where a check failed.
    pub first_failure: Option<usize>,
    pub notes: Vec<String>,
}

impl Assumption1Verdict {
    pub fn passes(&self) -> bool {
        self.l1_summable
            && self.support_connected
            && self.strictly_decreasing
            && self.strictly_positive
            && self.tail != TailStatus::Undecidable
    }
}

/// Checks that `g` is summable, has connected support and strictly
/// decreases on it; consecutive support samples must drop by more than `eps`.
pub fn verify_assumption1(g: &ImpulseResponse, eps: f64) -> Assumption1Verdict {
    let (horizon, tail) = g.check_horizon(CHECK_HORIZON_TAIL);
    let mut v = Assumption1Verdict {
        l1_summable: true,
        support_connected: true,
        strictly_decreasing: true,
        strictly_positive: true,
        horizon,
        tail,
        first_failure: None,
        notes: Vec::new(),
    };
    let start = match (0..horizon.max(1)).find(|&t| g.value(t as i64) != 0.0) {
        Some(s) => s,
        None => {
            v.support_connected = false;
            v.strictly_positive = false;
            v.notes.push("no nonzero sample within the checked horizon".into());
            return v;
        }
    };
    let end = match tail {
        TailStatus::Exact => horizon,
        _ => horizon.max(start + 1),
    };
    let fail = |v: &mut Assumption1Verdict, t: usize| {
        if v.first_failure.is_none() {
            v.first_failure = Some(t);
        }
    };
    let mut left_support = false;
    for t in start..end {
        let x = g.value(t as i64);
        if x == 0.0 {
            left_support = true;
            continue;
        }
        if left_support {
            v.support_connected = false;
            fail(&mut v, t);
            v.notes.push(format!("support resumes at t = {t} after a zero"));
            break;
        }
        if x < 0.0 {
            v.strictly_positive = false;
            fail(&mut v, t);
        }
        let next = g.value(t as i64 + 1);
        let on_support = next != 0.0 || t + 1 < end;
        if on_support && next != 0.0 && !(x - next > eps) {
            v.strictly_decreasing = false;
            fail(&mut v, t);
        }
    }
    if tail == TailStatus::Undecidable {
        v.notes.push(format!(
            "undecidable beyond horizon {horizon}: dominant pole is not positive real"
        ));
    }
    if !(g.value(start as i64) > 0.0) {
        v.strictly_positive = false;
    }
    v
}

/// Convexity on the support: `g(t+1) - 2 g(t) + g(t-1) >= 0` wherever all
/// three samples lie in the support. Undecidable tails count as not convex.
pub fn is_convex_on_support(g: &ImpulseResponse, horizon: Option<usize>) -> bool {
    let (h, tail) = g.check_horizon(CHECK_HORIZON_TAIL);
    if tail == TailStatus::Undecidable {
        return false;
    }
    let h = horizon.unwrap_or(h).max(h);
    let in_support = |t: usize| g.value(t as i64) != 0.0;
    (1..h).all(|t| {
        if !(in_support(t - 1) && in_support(t) && in_support(t + 1)) {
            return true;
        }
        let second = g.value(t as i64 + 1) - 2.0 * g.value(t as i64) + g.value(t as i64 - 1);
        second >= -1e-15 * g.value(t as i64 - 1).abs()
    })
}

/// `ḡ^P` with a certified per-entry truncation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSummation {
    pub period: usize,
    pub values: Vec<f64>,
    pub residual: f64,
}

/// `ḡ^P_i = Σ_{k>=0} g(i + kP)` for `i = 0..P`.
pub fn periodic_summation(g: &ImpulseResponse, period: usize, tol: f64) -> Result<PeriodicSummation> {
    periodic_summation_shifted(g, 0, period, tol)
}

/// Periodic summation of the delayed response `g(t - delay)`, summed
/// directly over the shifted index set.
pub fn periodic_summation_shifted(
    g: &ImpulseResponse,
    delay: usize,
    period: usize,
    tol: f64,
) -> Result<PeriodicSummation> {
    if period == 0 {
        return Err(Error::InvalidInput("period must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if delay == 0 {
        if let Repr::Geometric { a, gain } = g.repr {
            let denom = 1.0 - a.powi(period as i32);
            let values = (0..period).map(|i| gain * a.powi(i as i32) / denom).collect();
            return Ok(PeriodicSummation { period, values, residual: 0.0 });
        }
    }
    let mut values = Vec::with_capacity(period);
    let mut residual = 0.0f64;
    for i in 0..period {
        // first index i + kP >= delay
        let k0 = delay.saturating_sub(i).div_ceil(period);
        let mut t = i + k0 * period - delay;
        let mut terms = Vec::new();
        let mut count = 0usize;
        loop {
            let bound = g.tail_bound(t);
            if bound < tol {
                residual = residual.max(bound);
                break;
            }
            count += 1;
            if count > MAX_SUMMATION_TERMS {
                return Err(Error::SummationDidNotConverge { tol, cap: MAX_SUMMATION_TERMS, residual: bound });
            }
            terms.push(g.value(t as i64));
            t += period;
        }
        // small terms first
        values.push(terms.iter().rev().sum());
    }
    Ok(PeriodicSummation { period, values, residual })
}

/// `H_v w`: circulant with first column `v`.
pub fn circulant_apply(v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: w.len() });
    }
    let n = v.len();
    Ok((0..n)
        .map(|i| (0..n).map(|j| v[(i + n - j) % n] * w[j]).sum())
        .collect())
}

/// `Q_n^k v`: entries move down by `k` with wraparound, any integer `k`.
pub fn cyclic_shift(v: &[f64], k: i64) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.rem_euclid(n as i64) as usize;
    (0..n).map(|i| v[(i + n - k) % n]).collect()
}

/// Plant under analysis: `G(z) = z^{-Pd} G0(z)` with `g0(0) > 0`, in
/// feedback with a relay of dead zone `chi0`.
#[derive(Debug, Clone)]
pub struct PlantSpec {
    pub g0: ImpulseResponse,
    pub delay: usize,
    pub chi0: f64,
}

impl PlantSpec {
    /// Factors any leading zeros of `g` into the delay and checks that the
    /// first nonzero sample is positive.
    pub fn new(g: ImpulseResponse, extra_delay: usize, chi0: f64) -> Result<Self> {
        check_dead_zone(chi0)?;
        let (rd, g0) = factor_delay(&g)?;
        if !(g0.value(0) > 0.0) {
            return Err(Error::InvalidInput(format!(
                "first nonzero impulse-response sample must be positive, got {}",
                g0.value(0)
            )));
        }
        Ok(Self { g0, delay: extra_delay + rd, chi0 })
    }

    pub fn geometric(a: f64, delay: usize, chi0: f64) -> Result<Self> {
        Self::new(ImpulseResponse::geometric(a, 1.0)?, delay, chi0)
    }

    pub fn with_dead_zone(&self, chi0: f64) -> Result<Self> {
        check_dead_zone(chi0)?;
        Ok(Self { chi0, ..self.clone() })
    }

    pub fn with_delay(&self, delay: usize) -> Self {
        Self { delay, ..self.clone() }
    }

    /// Full response `g(t) = g0(t - Pd)`.
    pub fn g(&self, t: i64) -> f64 {
        self.g0.value(t - self.delay as i64)
    }
}

/// Precomputed loop map `s ↦ -Q_P^{Pd} H_{ḡ0^P} s` for one period.
#[derive(Debug, Clone)]
pub struct LoopMap {
    pub period: usize,
    pub shift: usize,
    pub gbar0: PeriodicSummation,
}

impl LoopMap {
    pub fn new(plant: &PlantSpec, period: usize, tol: f64) -> Result<Self> {
        let gbar0 = periodic_summation(&plant.g0, period, tol)?;
        Ok(Self { period, shift: plant.delay % period.max(1), gbar0 })
    }

    /// Entry `(i, j)` of the loop matrix.
    #[inline]
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let p = self.period;
        // (Q^d H x)_i = (H x)_{i-d}; H_{ab} = gbar_{a-b}
        let row = (i + p - self.shift) % p;
        -self.gbar0.values[(row + p - j) % p]
    }

    pub fn apply(&self, pattern: &[f64]) -> Result<Vec<f64>> {
        if pattern.len() != self.period {
            return Err(Error::LengthMismatch { left: pattern.len(), right: self.period });
        }
        let h = circulant_apply(&self.gbar0.values, pattern)?;
        Ok(cyclic_shift(&h, self.shift as i64).into_iter().map(|x| -x).collect())
    }
}

/// One period of the loop-gain output for relay pattern `pattern`.
pub fn loop_gain(plant: &PlantSpec, pattern: &SignPattern, tol: f64) -> Result<PeriodicSignal> {
    let map = LoopMap::new(plant, pattern.len(), tol)?;
    PeriodicSignal::new(map.apply(&pattern.to_f64())?)
}

/// Same loop gain with the delay folded into the kernel: `-H_{ḡ^P} s` where
/// `ḡ^P` is the periodic summation of the delayed response.
pub fn loop_gain_folded(plant: &PlantSpec, pattern: &SignPattern, tol: f64) -> Result<PeriodicSignal> {
    let gbar = periodic_summation_shifted(&plant.g0, plant.delay, pattern.len(), tol)?;
    let h = circulant_apply(&gbar.values, &pattern.to_f64())?;
    PeriodicSignal::new(h.into_iter().map(|x| -x).collect())
}
