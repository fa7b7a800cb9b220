//! Sign-variation calculus on finite vectors.
//!
//! Everything here works on one period of a periodic sequence. Linear
//! variations (`s_minus`, `s_plus`) count sign changes of the vector as
//! written; cyclic variations (`s_cyclic_minus`, `s_cyclic_plus`) count them
//! around the period, which is what periodic unimodality is defined through.

use std::fmt;
use std::ops::Sub;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything with a sign in {-1, 0, +1}.
pub trait Signum: Copy {
    fn sign(self) -> i8;
}

impl Signum for f64 {
    #[inline]
    fn sign(self) -> i8 {
        if self > 0.0 {
            1
        } else if self < 0.0 {
            -1
        } else {
            0
        }
    }
}

macro_rules! int_signum {
    ($($t:ty),*) => {$(
        impl Signum for $t {
            #[inline]
            fn sign(self) -> i8 {
                self.signum() as i8
            }
        }
    )*};
}
int_signum!(i8, i32, i64);

/// Cyclic forward difference: entry `i` is `v[i+1] - v[i]`, the last entry
/// wraps to `v[0] - v[n-1]`.
pub fn cyclic_diff<T>(v: &[T]) -> Vec<T>
where
    T: Copy + Sub<Output = T>,
{
    let n = v.len();
    (0..n).map(|i| v[(i + 1) % n] - v[i]).collect()
}

/// Number of sign changes after deleting zeros; `-1` for the zero vector.
pub fn s_minus<T: Signum>(v: &[T]) -> i32 {
    let mut last = 0i8;
    let mut changes = 0i32;
    let mut seen = false;
    for &x in v {
        let s = x.sign();
        if s == 0 {
            continue;
        }
        if seen && s != last {
            changes += 1;
        }
        last = s;
        seen = true;
    }
    if seen {
        changes
    } else {
        -1
    }
}

/// Maximal number of sign changes when every zero may be replaced by a sign
/// of our choosing. The zero vector of length `n` gives `n - 1`.
pub fn s_plus<T: Signum>(v: &[T]) -> i32 {
    const NONE: i32 = i32::MIN / 2;
    // best[0]: last sign negative, best[1]: last sign positive
    let mut best: Option<[i32; 2]> = None;
    for &x in v {
        let s = x.sign();
        let allowed: &[usize] = match s {
            1 => &[1],
            -1 => &[0],
            _ => &[0, 1],
        };
        let mut next = [NONE, NONE];
        for &k in allowed {
            next[k] = match best {
                None => 0,
                Some(b) => b[k].max(b[1 - k] + 1),
            };
        }
        best = Some(next);
    }
    match best {
        None => -1,
        Some(b) => b[0].max(b[1]),
    }
}

fn wrapped<T: Copy>(v: &[T], pivot: usize) -> Vec<T> {
    let n = v.len();
    (0..=n).map(|k| v[(pivot + k) % n]).collect()
}

/// Cyclic variation `S_c^-`: the supremum over rotations of `s_minus` applied
/// to the wrapped vector `[v_i, ..., v_n, v_1, ..., v_i]`.
pub fn s_cyclic_minus<T: Signum>(v: &[T]) -> i32 {
    (0..v.len())
        .map(|i| s_minus(&wrapped(v, i)))
        .max()
        .unwrap_or(-1)
}

/// Cyclic variation `S_c^+`.
///
/// The duplicated pivot of the wrapped vector is one entry of the period, so
/// both of its copies receive the same replacement. Pivoting at a nonzero
/// entry realises that; for the zero vector the maximum is the largest even
/// number not exceeding `n`.
pub fn s_cyclic_plus<T: Signum>(v: &[T]) -> i32 {
    let n = v.len();
    if n == 0 {
        return -1;
    }
    match v.iter().position(|x| x.sign() != 0) {
        Some(pivot) => s_plus(&wrapped(v, pivot)),
        None => (n - n % 2) as i32,
    }
}

/// Relay with symmetric dead zone `[-chi0, chi0]`; the boundary maps to 0.
pub fn relay(x: f64, chi0: f64) -> Result<i8> {
    relay_with_tolerance(x, chi0, 0.0)
}

/// Relay where `|x| <= chi0 + eps` counts as inside the dead zone.
pub fn relay_with_tolerance(x: f64, chi0: f64, eps: f64) -> Result<i8> {
    check_dead_zone(chi0)?;
    Ok(relay_unchecked(x, chi0 + eps.max(0.0)))
}

#[inline]
pub(crate) fn relay_unchecked(x: f64, chi0: f64) -> i8 {
    if x > chi0 {
        1
    } else if x < -chi0 {
        -1
    } else {
        0
    }
}

pub(crate) fn check_dead_zone(chi0: f64) -> Result<()> {
    if chi0.is_finite() && chi0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeDeadZone(chi0))
    }
}

/// Element-wise relay.
pub fn relay_vec(v: &[f64], chi0: f64) -> Result<SignPattern> {
    check_dead_zone(chi0)?;
    Ok(SignPattern(
        v.iter().map(|&x| relay_unchecked(x, chi0)).collect(),
    ))
}

/// Counts of positive, negative and zero entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl SignCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.zero
    }

    pub fn is_symmetric(&self) -> bool {
        self.positive == self.negative
    }
}

pub fn sign_counts<T: Signum>(v: &[T]) -> SignCounts {
    let mut c = SignCounts {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for &x in v {
        match x.sign() {
            1 => c.positive += 1,
            -1 => c.negative += 1,
            _ => c.zero += 1,
        }
    }
    c
}

/// Equal numbers of positive and negative entries.
pub fn is_sign_symmetric<T: Signum>(v: &[T]) -> bool {
    sign_counts(v).is_symmetric()
}

/// Periodic unimodality via the cyclic difference: `S_c^-(Δ_c v) = 2`.
pub fn is_periodically_unimodal(v: &[f64]) -> Result<bool> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(s_cyclic_minus(&cyclic_diff(v)) == 2)
}

/// Direct definition: some rotation of the period rises (weakly) to a peak
/// and then falls (weakly). Constant vectors have no rise and are excluded.
pub fn is_unimodal_by_rotation(v: &[f64]) -> bool {
    let n = v.len();
    if n == 0 || v.iter().all(|&x| x == v[0]) {
        return false;
    }
    (0..n).any(|start| {
        let w: Vec<f64> = (0..n).map(|k| v[(start + k) % n]).collect();
        let mut i = 0;
        while i + 1 < n && w[i + 1] >= w[i] {
            i += 1;
        }
        w[i..].windows(2).all(|p| p[1] <= p[0])
    })
}

/// Levels at which `S_c^-(v - γ·1)` can change value: every distinct entry
/// and every midpoint between consecutive distinct entries.
pub fn level_set_critical_values(v: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = Vec::with_capacity(2 * sorted.len());
    for (i, &x) in sorted.iter().enumerate() {
        out.push(x);
        if let Some(&next) = sorted.get(i + 1) {
            out.push(0.5 * (x + next));
        }
    }
    out
}

/// Level-set characterisation: `S_c^-(v - γ·1) <= 2` for every level `γ`.
pub fn is_unimodal_by_level_sets(v: &[f64]) -> bool {
    level_set_critical_values(v).into_iter().all(|gamma| {
        let shifted: Vec<f64> = v.iter().map(|&x| x - gamma).collect();
        s_cyclic_minus(&shifted) <= 2
    })
}

/// One period of a relay output: entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("sign pattern must be nonempty".into()));
        }
        if let Some(bad) = entries.iter().find(|&&e| !(-1..=1).contains(&e)) {
            return Err(Error::InvalidInput(format!(
                "sign pattern entries must be -1, 0 or 1, got {bad}"
            )));
        }
        Ok(Self(entries))
    }

    /// `[1; a]` followed by `[-1; b]`.
    pub fn half_wave(half: usize) -> Self {
        let mut e = vec![1i8; half];
        e.extend(std::iter::repeat_n(-1i8, half));
        Self(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| f64::from(e)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn counts(&self) -> SignCounts {
        sign_counts(&self.0)
    }

    /// Applies `Q^k`: entries move down by `k` with wraparound.
    pub fn rotated(&self, k: i64) -> Self {
        let n = self.0.len() as i64;
        let k = k.rem_euclid(n) as usize;
        let n = n as usize;
        Self((0..n).map(|i| self.0[(i + n - k) % n]).collect())
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&e| -e).collect())
    }

    /// Lexicographically smallest rotation together with the shift `k` such
    /// that `canonical.rotated(k) == self`.
    pub fn canonical_with_shift(&self) -> (Self, usize) {
        let n = self.0.len();
        let mut best = self.clone();
        let mut best_shift = 0;
        for k in 1..n {
            // rotating self by -k moves entry k to the front
            let cand = self.rotated(-(k as i64));
            if cand < best {
                best = cand;
                best_shift = k;
            }
        }
        (best, best_shift)
    }

    pub fn canonical(&self) -> Self {
        self.canonical_with_shift().0
    }

    /// Smallest `d >= 1` with `rotated(d) == self`.
    pub fn rotation_period(&self) -> usize {
        let n = self.0.len();
        (1..=n)
            .find(|&d| n % d == 0 && (0..n).all(|i| self.0[i] == self.0[(i + d) % n]))
            .unwrap_or(n)
    }

    /// All distinct rotations, in order of shift.
    pub fn rotations(&self) -> Vec<Self> {
        (0..self.rotation_period())
            .map(|k| self.rotated(k as i64))
            .collect()
    }

    /// Rotation of `[1; P/2, -1; P/2]`.
    pub fn is_half_wave(&self) -> bool {
        let n = self.0.len();
        n % 2 == 0 && self.canonical() == Self::half_wave(n / 2).canonical()
    }
}

impl From<SignPattern> for Vec<i8> {
    fn from(p: SignPattern) -> Self {
        p.0
    }
}

impl TryFrom<Vec<i8>> for SignPattern {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

/// Compact form: `+`, `0`, `-` per entry, e.g. `++0--0`.
impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.0 {
            f.write_str(match e {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

impl FromStr for SignPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                '0' => Ok(0),
                other => Err(Error::InvalidInput(format!("bad pattern character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .and_then(Self::new)
    }
}
