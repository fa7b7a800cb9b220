//! Variation-bounding certificates for circulant operators.
//!
//! A circulant `H_v` maps periodically unimodal inputs to periodically
//! unimodal outputs under two checkable conditions on its generator. These
//! checks back the analysis and double as test oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lti::{
    periodic_summation_shifted, verify_assumption1, PeriodicSignal, PlantSpec,
};
use crate::variation::{
    cyclic_diff, is_sign_symmetric, relay_vec, s_cyclic_minus, s_cyclic_plus, SignPattern,
};

/// Slack on the 2x2 inequalities so that exact-equality cases pass.
pub const VB2_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vb2Verdict {
    /// `S_c^-(Δ_c Δ_c v) <= 2`.
    pub condition1: bool,
    /// `(Δ_c v_t)^2 >= Δ_c v_{t-1} Δ_c v_{t+1}` for all `t`, indices mod `n`.
    pub condition2: bool,
    /// First index where condition 2 fails, or 0 when only condition 1 fails.
    pub witness: Option<usize>,
    /// Set for `n <= 3`, where every generator qualifies.
    pub unconditional: bool,
}

impl Vb2Verdict {
    pub fn passes(&self) -> bool {
        self.condition1 && self.condition2
    }
}

/// Sufficient conditions for `H_v` to keep `S_c^-(Δ_c w) <= 2`.
pub fn vb2_conditions(v: &[f64]) -> Vb2Verdict {
    let n = v.len();
    if n <= 3 {
        return Vb2Verdict { condition1: true, condition2: true, witness: None, unconditional: true };
    }
    let d = cyclic_diff(v);
    let condition1 = s_cyclic_minus(&cyclic_diff(&d)) <= 2;
    let failing = (0..n).find(|&t| {
        let prev = d[(t + n - 1) % n];
        let next = d[(t + 1) % n];
        d[t] * d[t] < prev * next - VB2_SLACK
    });
    let witness = match (condition1, failing) {
        (_, Some(t)) => Some(t),
        (false, None) => Some(0),
        _ => None,
    };
    Vb2Verdict { condition1, condition2: failing.is_none(), witness, unconditional: false }
}

/// Same conditions on an integer generator, evaluated without rounding.
pub fn vb2_conditions_exact(v: &[i64]) -> Vb2Verdict {
    let n = v.len();
    if n <= 3 {
        return Vb2Verdict { condition1: true, condition2: true, witness: None, unconditional: true };
    }
    let d = cyclic_diff(v);
    let condition1 = s_cyclic_minus(&cyclic_diff(&d)) <= 2;
    let failing = (0..n).find(|&t| d[t] * d[t] < d[(t + n - 1) % n] * d[(t + 1) % n]);
    let witness = match (condition1, failing) {
        (_, Some(t)) => Some(t),
        (false, None) => Some(0),
        _ => None,
    };
    Vb2Verdict { condition1, condition2: failing.is_none(), witness, unconditional: false }
}

/// Circulant product whose rows are summed in sorted order, so rows built
/// from the same multiset of terms come out bit-identical.
pub fn circulant_apply_sorted(v: &[f64], w: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut terms = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            terms.clear();
            terms.extend((0..n).map(|j| v[(i + n - j) % n] * w[j]));
            terms.sort_by(f64::total_cmp);
            terms.iter().sum()
        })
        .collect()
}

/// Random `w` of length `n` with `S_c^-(Δ_c w) <= 2`: an integer-valued
/// rise then fall, rotated by a random offset. Plateaus appear through zero
/// increments.
pub fn random_unimodal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 || rng.random_bool(0.05) {
        return vec![rng.random_range(-3i64..=3) as f64; n];
    }
    let rise_len = rng.random_range(1..n);
    let fall_len = n - rise_len;
    let rise: Vec<i64> = (0..rise_len)
        .map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..=4) })
        .collect();
    let mut total: i64 = rise.iter().sum();
    if total == 0 {
        return vec![0.0; n];
    }
    // split `total` into `fall_len` nonnegative parts
    let mut fall = vec![0i64; fall_len];
    while total > 0 {
        let k = rng.random_range(0..fall_len);
        let take = rng.random_range(1..=total);
        fall[k] += take;
        total -= take;
    }
    let base = rng.random_range(-5i64..=5);
    let mut w = Vec::with_capacity(n);
    let mut level = base;
    for step in rise.iter().copied().chain(fall.iter().map(|x| -x)) {
        w.push(level as f64);
        level += step;
    }
    let k = rng.random_range(0..n);
    crate::lti::cyclic_shift(&w, k as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationCounterexample {
    pub w: Vec<f64>,
    pub output: Vec<f64>,
    pub variation: i32,
}

/// Samples `trials` inputs `w` with `S_c^-(Δ_c w) <= 2` and checks that
/// `H_{rel(v)} w` keeps `S_c^-(Δ_c ·) <= 2`. Returns the first failure.
pub fn check_preservation(
    v: &[f64],
    chi0: f64,
    trials: usize,
    seed: u64,
) -> Result<Option<PreservationCounterexample>> {
    let generator = relay_vec(v, chi0)?.to_f64();
    let n = generator.len();
    if n <= 3 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let w = random_unimodal(n, &mut rng);
        let output = circulant_apply_sorted(&generator, &w);
        let variation = s_cyclic_minus(&cyclic_diff(&output));
        if variation > 2 {
            return Ok(Some(PreservationCounterexample { w, output, variation }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub pattern: SignPattern,
    pub output: Vec<f64>,
    /// Hypotheses of the invariance result, reported rather than enforced.
    pub relay_variation_is_two: bool,
    pub input_unimodal: bool,
    pub plant_admissible: bool,
    pub sign_symmetric: bool,
    pub diff_variation: i32,
    pub output_variation: i32,
    /// `S_c^+` of the output, only computed for sign-symmetric patterns.
    pub output_variation_plus: Option<i32>,
}

impl InvarianceVerdict {
    pub fn preconditions_hold(&self) -> bool {
        self.relay_variation_is_two && self.input_unimodal && self.plant_admissible
    }

    pub fn conclusions_hold(&self) -> bool {
        self.diff_variation <= 2
            && self.output_variation <= 2
            && self.output_variation_plus.is_none_or(|s| s <= 2)
    }
}

/// Computes `o = -H_{ḡ^P} rel(u)` (delay folded into `ḡ`) and reports the
/// variation of `o` and of its cyclic difference.
pub fn unimodality_invariance(plant: &PlantSpec, u: &PeriodicSignal, tol: f64) -> Result<InvarianceVerdict> {
    let pattern = relay_vec(u.values(), plant.chi0)?;
    let gbar = periodic_summation_shifted(&plant.g0, plant.delay, u.period(), tol)?;
    let output: Vec<f64> = circulant_apply_sorted(&gbar.values, &pattern.to_f64())
        .into_iter()
        .map(|x| -x)
        .collect();
    let sign_symmetric = is_sign_symmetric(pattern.entries());
    Ok(InvarianceVerdict {
        relay_variation_is_two: s_cyclic_plus(pattern.entries()) == 2,
        input_unimodal: s_cyclic_minus(&cyclic_diff(u.values())) == 2,
        plant_admissible: verify_assumption1(&plant.g0, 0.0).passes(),
        sign_symmetric,
        diff_variation: s_cyclic_minus(&cyclic_diff(&output)),
        output_variation: s_cyclic_minus(&output),
        output_variation_plus: sign_symmetric.then(|| s_cyclic_plus(&output)),
        pattern,
        output,
    })
}

/// A signal whose relay image is `pattern` and which is periodically
/// unimodal whenever the pattern is.
pub fn signal_for_pattern(pattern: &SignPattern, chi0: f64) -> Result<PeriodicSignal> {
    let amp = chi0 + 1.0;
    PeriodicSignal::new(pattern.entries().iter().map(|&s| s as f64 * amp).collect())
}

/// `(Δ_c v_t)^2 - Δ_c v_{t-1} Δ_c v_{t+1}` for each `t`: the determinants of
/// the 2x2 blocks of consecutive rows and columns of `H_{Δ_c v}`.
pub fn vb2_margins(v: &[f64]) -> Vec<f64> {
    let d = cyclic_diff(v);
    let n = d.len();
    (0..n)
        .map(|t| d[t] * d[t] - d[(t + n - 1) % n] * d[(t + 1) % n])
        .collect()
}
