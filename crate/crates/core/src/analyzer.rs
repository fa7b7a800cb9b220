//! Fixed-point search for self-oscillations of the delayed relay loop.
//!
//! A P-periodic `u` is a closed-loop solution iff its relay image `s`
//! satisfies `rel(-Q^{Pd} H_{ḡ0^P} s) = s`. Under the unimodality
//! hypothesis only four pattern families (and their rotations) can occur,
//! so the search is finite for each period.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{
    is_convex_on_support, verify_assumption1, Assumption1Verdict, ImpulseResponse, ImpulseSpec,
    LoopMap, PeriodicSignal, PlantSpec, DEFAULT_SUMMATION_TOL,
};
use crate::variation::{
    cyclic_diff, is_periodically_unimodal, relay_unchecked, s_cyclic_minus, s_cyclic_plus,
    SignPattern,
};

/// The partial-sum gap must exceed this to count as positive.
pub const PS_GAP_TOL: f64 = 1e-12;
/// Largest period the exhaustive oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 16;
/// Slack used when pruning partial sign assignments in the oracle.
const PRUNE_SLACK: f64 = 1e-9;
const MAX_PS_SEARCH: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationFlags {
    /// `S_c^+(rel(u)) = 2` and `S_c^-(Δ_c u) = 2`.
    pub satisfies_assumption2: bool,
    pub sign_symmetric: bool,
    pub unimodal: bool,
    /// Non-constant closed-loop solution.
    pub is_self_oscillation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationRecord {
    pub period: usize,
    /// Canonical (lexicographically smallest) rotation of the relay image.
    pub pattern: SignPattern,
    /// One period of `u` aligned with `pattern`.
    pub waveform: PeriodicSignal,
    pub flags: OscillationFlags,
    /// Smallest period of the pattern; equals `period` unless the pattern repeats.
    pub fundamental_period: usize,
    /// Rotations `k` such that `pattern.rotated(k)` is a distinct phase of the
    /// same oscillation.
    pub phases: Vec<usize>,
}

fn classify_flags(pattern: &SignPattern, u: &[f64]) -> OscillationFlags {
    let diff_var = s_cyclic_minus(&cyclic_diff(u));
    OscillationFlags {
        satisfies_assumption2: s_cyclic_plus(pattern.entries()) == 2 && diff_var == 2,
        sign_symmetric: pattern.counts().is_symmetric(),
        unimodal: is_periodically_unimodal(u).unwrap_or(false),
        is_self_oscillation: diff_var >= 2,
    }
}

/// Record for `pattern` if it reproduces itself through the loop, else `None`.
/// Relay comparisons are strict: a loop value exactly on `±chi0` maps to 0.
pub fn verify_fixed_point(plant: &PlantSpec, pattern: &SignPattern, tol: f64) -> Result<Option<OscillationRecord>> {
    if pattern.is_empty() {
        return Err(Error::Precondition("pattern must be nonempty".into()));
    }
    let map = LoopMap::new(plant, pattern.len(), tol)?;
    Ok(verify_with_map(&map, plant.chi0, pattern))
}

fn verify_with_map(map: &LoopMap, chi0: f64, pattern: &SignPattern) -> Option<OscillationRecord> {
    let (canonical, _) = pattern.canonical_with_shift();
    let s = canonical.to_f64();
    let u = map.apply(&s).expect("length checked");
    let fixed = u
        .iter()
        .zip(canonical.entries())
        .all(|(&x, &e)| relay_unchecked(x, chi0) == e);
    if !fixed {
        return None;
    }
    let flags = classify_flags(&canonical, &u);
    let fundamental_period = canonical.rotation_period();
    Some(OscillationRecord {
        period: canonical.len(),
        waveform: PeriodicSignal::new(u).expect("finite"),
        flags,
        fundamental_period,
        phases: (0..fundamental_period).collect(),
        pattern: canonical,
    })
}

/// Smallest `t >= 1` with `Σ_{k<t} g0(k) - Σ_{k>=t} g0(k) > PS_GAP_TOL`.
pub fn compute_ps(g0: &ImpulseResponse) -> Result<usize> {
    let mut head = 0.0;
    for t in 1..MAX_PS_SEARCH {
        head += g0.value(t as i64 - 1);
        let (tail, err) = g0.tail_sum(t);
        let gap = head - tail;
        if gap - err > PS_GAP_TOL {
            return Ok(t);
        }
        if gap + err > PS_GAP_TOL {
            // sign of the gap is within the certified error; keep going only
            // while the tail can still shrink
            if g0.tail_bound(t) < PS_GAP_TOL {
                return Err(Error::Undecidable(format!(
                    "partial-sum gap at t = {t} is within {err:e} of the threshold"
                )));
            }
        }
        if g0.tail_bound(t) == 0.0 && gap <= PS_GAP_TOL {
            return Err(Error::Undecidable(format!(
                "partial-sum gap never exceeds {PS_GAP_TOL:e} (finite support ends at t = {t})"
            )));
        }
    }
    Err(Error::Undecidable("partial-sum gap stayed nonpositive over the search horizon".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodBounds {
    pub lower: usize,
    pub upper_general: usize,
    /// Tighter upper bound for convex `g0` (requires `Pd > 1`).
    pub upper_convex: Option<usize>,
    pub ps: usize,
    /// Open interval `(Pd, 2Pd)` that holds no unimodal oscillation.
    pub exclusion: (usize, usize),
}

impl PeriodBounds {
    pub fn effective_upper(&self) -> usize {
        self.upper_convex.map_or(self.upper_general, |c| c.min(self.upper_general))
    }
}

/// Period range for unimodal oscillations with `P >= Pd`.
pub fn period_bounds(plant: &PlantSpec) -> Result<PeriodBounds> {
    let pd = plant.delay;
    if pd == 0 {
        return Err(Error::Precondition("period bounds need a delay of at least 1".into()));
    }
    let ps = compute_ps(&plant.g0)?;
    let convex = pd > 1 && is_convex_on_support(&plant.g0, None);
    Ok(PeriodBounds {
        lower: 2 * pd,
        upper_general: 2 * (pd + ps),
        upper_convex: convex.then_some(4 * pd + 2),
        ps,
        exclusion: (pd, 2 * pd),
    })
}

/// Default search limit: `2(Pd + Ps)` rounded up to even, plus 2.
pub fn default_pmax(plant: &PlantSpec) -> Result<usize> {
    let ps = compute_ps(&plant.g0)?;
    let upper = 2 * (plant.delay + ps);
    Ok(upper.next_multiple_of(2) + 2)
}

/// Canonical representatives of `[1^a,0,-1^b,0]`, `[1^a,-1^b,0]`,
/// `[1^a,0,-1^b]` and `[1^a,-1^b]` with `a, b >= 1`, sorted.
pub fn enumerate_unimodal_patterns(period: usize) -> Result<Vec<SignPattern>> {
    if period < 2 {
        return Err(Error::Precondition(format!("period must be at least 2, got {period}")));
    }
    let block = |a: usize, mid: &[i8], b: usize, end: &[i8]| {
        let mut v = vec![1i8; a];
        v.extend_from_slice(mid);
        v.extend(std::iter::repeat_n(-1i8, b));
        v.extend_from_slice(end);
        SignPattern::new(v).expect("valid").canonical()
    };
    let mut out = BTreeSet::new();
    for a in 1..period {
        // [1^a, -1^b]
        out.insert(block(a, &[], period - a, &[]));
        if period >= 3 && a <= period - 2 {
            let b = period - 1 - a;
            out.insert(block(a, &[], b, &[0]));
            out.insert(block(a, &[0], b, &[]));
        }
        if period >= 4 && a <= period - 3 {
            out.insert(block(a, &[0], period - 2 - a, &[0]));
        }
    }
    Ok(out.into_iter().collect())
}

/// Whether the half-wave oscillation of period `2Pd` exists: its smallest
/// positive loop value must exceed `chi0`.
pub fn exists_2pd(plant: &PlantSpec) -> Result<bool> {
    let pd = plant.delay;
    if pd == 0 {
        return Err(Error::Precondition("needs a delay of at least 1".into()));
    }
    let gbar = crate::lti::periodic_summation(&plant.g0, 2 * pd, DEFAULT_SUMMATION_TOL)?;
    let pattern = SignPattern::half_wave(pd).to_f64();
    // first entry of H_{ḡ0} s
    let first: f64 = (0..2 * pd).map(|j| gbar.values[(2 * pd - j) % (2 * pd)] * pattern[j]).sum();
    Ok(first > plant.chi0)
}

/// `Pd`-th largest entry of `H_{ḡ^{2Pd}} [1^Pd, -1^Pd]` with the delay folded
/// into `ḡ`; the dead zone must stay below it for the subharmonics to exist.
pub fn chi0_threshold(plant: &PlantSpec) -> Result<f64> {
    let pd = plant.delay;
    if pd == 0 {
        return Err(Error::Precondition("needs a delay of at least 1".into()));
    }
    let gbar = crate::lti::periodic_summation_shifted(&plant.g0, pd, 2 * pd, DEFAULT_SUMMATION_TOL)?;
    let mut v = crate::lti::circulant_apply(&gbar.values, &SignPattern::half_wave(pd).to_f64())?;
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v[pd - 1])
}

/// Even periods `2Pd / (2n + 1)`, largest first.
pub fn subharmonic_periods(pd: usize) -> Vec<usize> {
    if pd == 0 {
        return Vec::new();
    }
    (0..)
        .map(|n| 2 * n + 1)
        .take_while(|&d| d <= 2 * pd)
        .filter(|&d| (2 * pd) % d == 0 && ((2 * pd) / d) % 2 == 0)
        .map(|d| 2 * pd / d)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsenceVerdict {
    pub applicable: bool,
    /// No unimodal self-oscillation can exist.
    pub absent: bool,
    pub reason: String,
    /// Largest period covered by an exhaustive sweep, if one was run.
    pub swept_up_to: Option<usize>,
    /// Nonzero fixed patterns found by the sweep.
    pub fixed_points: Vec<SignPattern>,
}

/// Absence of unimodal self-oscillations for an undelayed plant, optionally
/// confirmed by the exhaustive oracle for every period up to `sweep`.
pub fn check_absence(plant: &PlantSpec, sweep: Option<usize>, tol: f64) -> Result<AbsenceVerdict> {
    let a1 = verify_assumption1(&plant.g0, 0.0);
    let inapplicable = |reason: String| AbsenceVerdict {
        applicable: false,
        absent: false,
        reason,
        swept_up_to: None,
        fixed_points: Vec::new(),
    };
    if plant.delay != 0 {
        return Ok(inapplicable(format!("plant has delay {}; absence needs zero delay", plant.delay)));
    }
    if !a1.passes() {
        return Ok(inapplicable(
            "theorem inapplicable: impulse response is not strictly decreasing on a connected support".into(),
        ));
    }
    let mut verdict = AbsenceVerdict {
        applicable: true,
        absent: true,
        reason: "no unimodal self-oscillation exists for an undelayed strictly decreasing plant".into(),
        swept_up_to: None,
        fixed_points: Vec::new(),
    };
    if let Some(pmax) = sweep {
        for p in 1..=pmax {
            verdict.fixed_points.extend(brute_force_fixed_points(plant, p, pmax.max(DEFAULT_ORACLE_CAP), tol)?);
        }
        verdict.swept_up_to = Some(pmax);
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Unimodal record that is not sign-symmetric, or zero-free with `P != 2 P_p`.
    Necessity,
    BelowLower,
    AboveGeneral,
    AboveConvex,
    Exclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub kind: ViolationKind,
    pub period: usize,
    pub pattern: SignPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffSide {
    AnalyzerOnly,
    OracleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDiffEntry {
    pub period: usize,
    pub pattern: SignPattern,
    pub side: DiffSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub pmax: usize,
    /// Skip zero-free patterns that are not sign-symmetric.
    pub prune: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub plant: ImpulseSpec,
    pub chi0: f64,
    #[serde(rename = "Pd")]
    pub pd: usize,
    pub pmax: usize,
    pub assumption1: Assumption1Verdict,
    pub bounds: Option<PeriodBounds>,
    pub records: Vec<OscillationRecord>,
    pub violations: Vec<BoundViolation>,
    pub oracle_diff: Vec<OracleDiffEntry>,
}

impl OscillationReport {
    pub fn periods(&self) -> BTreeSet<usize> {
        self.records.iter().map(|r| r.period).collect()
    }

    /// Largest period among records with `P >= Pd`.
    pub fn max_period_at_least_delay(&self) -> Option<usize> {
        self.records.iter().map(|r| r.period).filter(|&p| p >= self.pd).max()
    }
}

/// Verifies every unimodal pattern with period `2..=pmax` and checks each
/// record against the necessity condition, the period bounds and the
/// exclusion zone.
pub fn find_oscillations(plant: &PlantSpec, opts: &AnalysisOptions) -> Result<OscillationReport> {
    if opts.pmax < 2 {
        return Err(Error::Precondition(format!("pmax must be at least 2, got {}", opts.pmax)));
    }
    let assumption1 = verify_assumption1(&plant.g0, 0.0);
    let bounds = if plant.delay >= 1 && assumption1.passes() {
        Some(period_bounds(plant)?)
    } else {
        None
    };
    let per_period: Vec<Result<Vec<OscillationRecord>>> = (2..=opts.pmax)
        .into_par_iter()
        .map(|p| {
            let map = LoopMap::new(plant, p, opts.tol)?;
            Ok(enumerate_unimodal_patterns(p)?
                .into_iter()
                .filter(|s| !opts.prune || s.counts().zero > 0 || s.counts().is_symmetric())
                .filter_map(|s| verify_with_map(&map, plant.chi0, &s))
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    for r in per_period {
        records.extend(r?);
    }
    records.sort_by(|a, b| (a.period, a.pattern.entries()).cmp(&(b.period, b.pattern.entries())));
    let violations = if assumption1.passes() {
        check_records(&records, plant.delay, bounds.as_ref())
    } else {
        Vec::new()
    };
    Ok(OscillationReport {
        plant: plant.g0.to_spec(),
        chi0: plant.chi0,
        pd: plant.delay,
        pmax: opts.pmax,
        assumption1,
        bounds,
        records,
        violations,
        oracle_diff: Vec::new(),
    })
}

/// Records contradicting the necessity condition, the period bounds (for
/// `P >= Pd`) or the exclusion zone.
pub fn check_records(records: &[OscillationRecord], pd: usize, bounds: Option<&PeriodBounds>) -> Vec<BoundViolation> {
    let mut out = Vec::new();
    let mut push = |kind, r: &OscillationRecord| {
        out.push(BoundViolation { kind, period: r.period, pattern: r.pattern.clone() })
    };
    for r in records.iter().filter(|r| r.flags.satisfies_assumption2) {
        let c = r.pattern.counts();
        if !c.is_symmetric() || (c.zero == 0 && r.period != 2 * c.positive) {
            push(ViolationKind::Necessity, r);
        }
        let Some(b) = bounds else { continue };
        if r.period > pd && r.period < 2 * pd {
            push(ViolationKind::Exclusion, r);
        }
        if r.period < pd {
            continue;
        }
        if r.period < b.lower {
            push(ViolationKind::BelowLower, r);
        }
        if r.period > b.upper_general {
            push(ViolationKind::AboveGeneral, r);
        }
        if b.upper_convex.is_some_and(|c| r.period > c) {
            push(ViolationKind::AboveConvex, r);
        }
    }
    out
}

/// Every nonzero `s ∈ {-1,0,1}^P` with `rel(loop(s)) = s`, sorted.
/// Partial assignments are discarded as soon as some already-fixed entry can
/// no longer land on its sign whatever the remaining entries are.
pub fn brute_force_fixed_points(plant: &PlantSpec, period: usize, cap: usize, tol: f64) -> Result<Vec<SignPattern>> {
    if period > cap {
        return Err(Error::OracleCapExceeded { period, cap });
    }
    if period == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let map = LoopMap::new(plant, period, tol)?;
    let search = Search::new(&map, plant.chi0);
    let prefix_len = period.min(3);
    let prefixes: Vec<Vec<i8>> = (0..3usize.pow(prefix_len as u32))
        .map(|code| (0..prefix_len).map(|i| ((code / 3usize.pow(i as u32)) % 3) as i8 - 1).collect())
        .collect();
    let mut found: Vec<SignPattern> = prefixes
        .par_iter()
        .flat_map_iter(|prefix| {
            let mut out = Vec::new();
            search.run(prefix, &mut out);
            out
        })
        .collect();
    found.sort_by(|a, b| a.entries().cmp(b.entries()));
    Ok(found)
}

struct Search<'a> {
    map: &'a LoopMap,
    chi0: f64,
    n: usize,
    /// `coef[i * n + j]`
    coef: Vec<f64>,
    /// `rest[i * (n + 1) + k] = Σ_{j>=k} |coef(i, j)|`
    rest: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(map: &'a LoopMap, chi0: f64) -> Self {
        let n = map.period;
        let mut coef = vec![0.0; n * n];
        let mut rest = vec![0.0; n * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                coef[i * n + j] = map.coefficient(i, j);
            }
            for k in (0..n).rev() {
                rest[i * (n + 1) + k] = rest[i * (n + 1) + k + 1] + coef[i * n + k].abs();
            }
        }
        Self { map, chi0, n, coef, rest }
    }

    fn feasible(&self, sign: i8, lo: f64, hi: f64) -> bool {
        match sign {
            1 => hi > self.chi0 - PRUNE_SLACK,
            -1 => lo < -self.chi0 + PRUNE_SLACK,
            _ => lo <= self.chi0 + PRUNE_SLACK && hi >= -self.chi0 - PRUNE_SLACK,
        }
    }

    fn run(&self, prefix: &[i8], out: &mut Vec<SignPattern>) {
        let mut s = vec![0i8; self.n];
        let mut partial = vec![0.0; self.n];
        for (k, &v) in prefix.iter().enumerate() {
            s[k] = v;
            for i in 0..self.n {
                partial[i] += self.coef[i * self.n + k] * v as f64;
            }
        }
        if self.consistent(&s, &partial, prefix.len()) {
            self.descend(&mut s, &mut partial, prefix.len(), out);
        }
    }

    fn consistent(&self, s: &[i8], partial: &[f64], depth: usize) -> bool {
        (0..depth).all(|i| {
            let r = self.rest[i * (self.n + 1) + depth];
            self.feasible(s[i], partial[i] - r, partial[i] + r)
        })
    }

    fn descend(&self, s: &mut [i8], partial: &mut [f64], depth: usize, out: &mut Vec<SignPattern>) {
        let n = self.n;
        if depth == n {
            if s.iter().all(|&x| x == 0) {
                return;
            }
            let f: Vec<f64> = s.iter().map(|&x| x as f64).collect();
            let u = self.map.apply(&f).expect("length");
            if u.iter().zip(s.iter()).all(|(&x, &e)| relay_unchecked(x, self.chi0) == e) {
                out.push(SignPattern::new(s.to_vec()).expect("valid"));
            }
            return;
        }
        for v in [-1i8, 0, 1] {
            s[depth] = v;
            if v != 0 {
                for i in 0..n {
                    partial[i] += self.coef[i * n + depth] * v as f64;
                }
            }
            if self.consistent(s, partial, depth + 1) {
                self.descend(s, partial, depth + 1, out);
            }
            if v != 0 {
                for i in 0..n {
                    partial[i] -= self.coef[i * n + depth] * v as f64;
                }
            }
        }
        s[depth] = 0;
    }
}

/// Canonical patterns with `S_c^+ = 2` found by the oracle at `period`.
pub fn oracle_unimodal_set(plant: &PlantSpec, period: usize, cap: usize, tol: f64) -> Result<BTreeSet<SignPattern>> {
    Ok(brute_force_fixed_points(plant, period, cap, tol)?
        .into_iter()
        .filter(|s| s_cyclic_plus(s.entries()) == 2)
        .map(|s| s.canonical())
        .collect())
}

/// Symmetric difference between analyzer records and oracle fixed points
/// (restricted to `S_c^+ = 2`) for each period up to `min(pmax, cap)`.
pub fn oracle_diff(plant: &PlantSpec, records: &[OscillationRecord], pmax: usize, cap: usize, tol: f64) -> Result<Vec<OracleDiffEntry>> {
    let mut out = Vec::new();
    for p in 2..=pmax.min(cap) {
        let oracle = oracle_unimodal_set(plant, p, cap, tol)?;
        let analyzer: BTreeSet<SignPattern> = records
            .iter()
            .filter(|r| r.period == p && s_cyclic_plus(r.pattern.entries()) == 2)
            .map(|r| r.pattern.clone())
            .collect();
        out.extend(analyzer.difference(&oracle).map(|s| OracleDiffEntry {
            period: p,
            pattern: s.clone(),
            side: DiffSide::AnalyzerOnly,
        }));
        out.extend(oracle.difference(&analyzer).map(|s| OracleDiffEntry {
            period: p,
            pattern: s.clone(),
            side: DiffSide::OracleOnly,
        }));
    }
    Ok(out)
}
