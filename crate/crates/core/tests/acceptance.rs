//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relosc::analyzer::{default_pmax, oracle_diff, DEFAULT_ORACLE_CAP};
use relosc::lti::{circulant_apply, DEFAULT_SUMMATION_TOL as TOL};
use relosc::simulator::{detect_period, repeat_seed, SimulationOptions};
use relosc::tp::{signal_for_pattern, unimodality_invariance, vb2_conditions};
use relosc::variation::{
    cyclic_diff, is_unimodal_by_level_sets, is_unimodal_by_rotation, s_cyclic_minus, s_cyclic_plus, s_minus, s_plus,
};
use relosc::{
    brute_force_fixed_points, check_absence, chi0_threshold, compute_ps, enumerate_unimodal_patterns, exists_2pd,
    find_oscillations, simulate, AnalysisOptions, OscillationReport, PlantSpec, SignPattern,
};

type Outcome = Result<String, String>;

/// Every verified point with `P >= Pd` from criteria 1-6, with its `Ps`.
struct Point {
    source: &'static str,
    pd: usize,
    period: usize,
    ps: usize,
}

static POINTS: Mutex<Vec<Point>> = Mutex::new(Vec::new());
static EXIT_CODES: Mutex<Vec<(&'static str, i32)>> = Mutex::new(Vec::new());
static REPORTED_VIOLATIONS: Mutex<usize> = Mutex::new(0);

fn collect(source: &'static str, report: &OscillationReport) {
    let ps = report.bounds.as_ref().expect("delayed plants carry bounds").ps;
    *REPORTED_VIOLATIONS.lock().unwrap() += report.violations.len();
    let mut points = POINTS.lock().unwrap();
    for r in report.records.iter().filter(|r| r.period >= report.pd) {
        points.push(Point { source, pd: report.pd, period: r.period, ps });
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_relosc")
}

fn plants_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("plants")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("sweep.csv");
    let status = Command::new(bin())
        .args(["sweep", "--plant"])
        .arg(plants_dir().join("undelayed.json"))
        .args(["--delays", "1..12", "--dead-zones", "0", "--pmax", "26", "--format", "csv", "--out"])
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    let code = status.code().unwrap_or(-1);
    EXIT_CODES.lock().unwrap().push(("sweep a=0.1", code));
    ensure(code == 0, || format!("sweep exited with {code}"))?;
    let mut reader = csv::Reader::from_path(&out).map_err(|e| e.to_string())?;
    let mut found = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        if &row[4] == "true" {
            found.insert((row[0].parse::<usize>().unwrap(), row[2].parse::<usize>().unwrap()));
        }
    }
    let mut expected: BTreeSet<(usize, usize)> = (1..=12).map(|pd| (pd, 2 * pd)).collect();
    expected.extend([(3, 2), (5, 2), (6, 4), (7, 2), (9, 2), (9, 6), (10, 4), (11, 2), (12, 8)]);
    let extra: Vec<_> = found.difference(&expected).collect();
    let missing: Vec<_> = expected.difference(&found).collect();
    ensure(extra.is_empty() && missing.is_empty(), || format!("extra {extra:?}, missing {missing:?}"))?;

    // same grid through the library, feeding the bound-integrity check
    let base = PlantSpec::geometric(0.1, 0, 0.0).unwrap();
    for pd in 1..=12 {
        let report = find_oscillations(&base.with_delay(pd), &AnalysisOptions { pmax: 26, prune: false, tol: TOL })
            .map_err(|e| e.to_string())?;
        collect("a=0.1 sweep", &report);
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("{} points, exact match, {:.2?}", found.len(), start.elapsed()))
}

fn criterion_2() -> Outcome {
    let plant = PlantSpec::geometric(0.1, 9, 0.0).unwrap();
    let report = find_oscillations(&plant, &AnalysisOptions { pmax: default_pmax(&plant).unwrap(), prune: false, tol: TOL })
        .map_err(|e| e.to_string())?;
    collect("delay 9", &report);
    let periods: Vec<usize> = report.periods().into_iter().collect();
    ensure(periods == [2, 6, 18], || format!("verified periods {periods:?}"))?;
    let mut reached = Vec::new();
    for (seed, want) in [("+++++++++---------", 18), ("+++---+++---+++---", 6), ("+-+-+-+-+-+-+-+-+-", 2)] {
        let seed: SignPattern = seed.parse().unwrap();
        let history = repeat_seed(seed.entries(), 18);
        let traj = simulate(&plant, &history, 200, &SimulationOptions::default()).map_err(|e| e.to_string())?;
        let got = detect_period(&traj, 1e-9).map(|s| s.period);
        ensure(got == Some(want), || format!("seed {seed} settled to {got:?}, expected {want}"))?;
        reached.push(want);
    }
    Ok(format!("verified {periods:?}, simulated {reached:?}"))
}

fn criterion_3() -> Outcome {
    let pd = 3;
    let plant = PlantSpec::geometric(0.1, pd, 0.0).unwrap();
    let threshold = chi0_threshold(&plant).map_err(|e| e.to_string())?;
    ensure((threshold - 0.8891).abs() < 1e-3, || format!("threshold {threshold}"))?;

    // direct product: delayed response summed over period 2Pd, applied to the half wave
    let period = 2 * pd;
    let g = |t: usize| if t >= pd { 0.1f64.powi((t - pd) as i32) } else { 0.0 };
    let gbar: Vec<f64> = (0..period).map(|t| (0..200).map(|k| g(t + k * period)).sum()).collect();
    let half = SignPattern::half_wave(pd).to_f64();
    let u: Vec<f64> = circulant_apply(&gbar, &half).unwrap().into_iter().map(|x| -x).collect();
    let direct = u.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    ensure((threshold - direct).abs() < 1e-10, || format!("threshold {threshold} vs direct {direct}"))?;

    let below = exists_2pd(&plant.with_dead_zone(0.8).unwrap()).map_err(|e| e.to_string())?;
    let above = exists_2pd(&plant.with_dead_zone(0.9).unwrap()).map_err(|e| e.to_string())?;
    ensure(below && !above, || format!("exists at 0.8: {below}, at 0.9: {above}"))?;
    Ok(format!("threshold {threshold:.10}, direct {direct:.10}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (a, want_ps, expected) in [
        (0.9, 7, vec![2, 6, 10, 14, 18, 22, 26, 30]),
        (0.1, 1, (1..=8).map(|pd| 2 * pd).collect::<Vec<usize>>()),
    ] {
        let base = PlantSpec::geometric(a, 0, 0.0).unwrap();
        let ps = compute_ps(&base.g0).map_err(|e| e.to_string())?;
        if ps != want_ps {
            failures.push(format!("a={a}: Ps = {ps}, expected {want_ps}"));
        }
        let mut maxima = Vec::new();
        for pd in 1..=8 {
            let plant = base.with_delay(pd);
            let pmax = default_pmax(&plant).unwrap().max(4 * pd + 4);
            let report = find_oscillations(&plant, &AnalysisOptions { pmax, prune: false, tol: TOL })
                .map_err(|e| e.to_string())?;
            collect(if a > 0.5 { "a=0.9 sweep" } else { "a=0.1 bound sweep" }, &report);
            maxima.push(report.max_period_at_least_delay().unwrap_or(0));
            for r in report.records.iter().filter(|r| r.period >= pd) {
                if r.period > 2 * (pd + ps) || r.period > 4 * pd + 2 {
                    failures.push(format!("a={a} Pd={pd}: P={} breaks a bound", r.period));
                }
            }
        }
        if maxima != expected {
            failures.push(format!("a={a}: max periods {maxima:?}, expected {expected:?}"));
        }
        summary.push(format!("a={a}: {maxima:?}"));
    }
    if let Err(e) = within(Duration::from_secs(30), start) {
        failures.push(e);
    }
    if failures.is_empty() {
        Ok(summary.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    for a in [0.1, 0.9] {
        for chi0 in [0.0, 0.5] {
            let plant = PlantSpec::geometric(a, 0, chi0).unwrap();
            let verdict = check_absence(&plant, Some(12), TOL).map_err(|e| e.to_string())?;
            ensure(verdict.applicable && verdict.absent, || format!("a={a} chi0={chi0}: {}", verdict.reason))?;
            let nonzero: Vec<_> = verdict.fixed_points.iter().filter(|s| !s.is_zero()).collect();
            ensure(nonzero.is_empty(), || format!("a={a} chi0={chi0}: fixed patterns {nonzero:?}"))?;
            // independent of check_absence: direct oracle calls per period
            for p in 1..=12 {
                let fixed = brute_force_fixed_points(&plant, p, DEFAULT_ORACLE_CAP, TOL).map_err(|e| e.to_string())?;
                ensure(fixed.iter().all(|s| s.is_zero()), || format!("a={a} chi0={chi0} P={p}: {fixed:?}"))?;
            }
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("no nonzero fixed pattern for P <= 12, {:.2?}", start.elapsed()))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut compared = 0;
    for _ in 0..20 {
        let a = rng.random_range(0.05..=0.95);
        let pd = rng.random_range(1..=5);
        let chi0 = rng.random_range(0.0..=1.0);
        let plant = PlantSpec::geometric(a, pd, chi0).unwrap();
        let report = find_oscillations(&plant, &AnalysisOptions { pmax: 12, prune: false, tol: TOL })
            .map_err(|e| e.to_string())?;
        collect("random plants", &report);
        let diff = oracle_diff(&plant, &report.records, 12, DEFAULT_ORACLE_CAP, TOL).map_err(|e| e.to_string())?;
        ensure(diff.is_empty(), || format!("a={a} Pd={pd} chi0={chi0}: {diff:?}"))?;
        compared += report.records.len();
    }
    Ok(format!("20 plants, {compared} records, no disagreement"))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    const CASES: usize = 10_000;
    for _ in 0..CASES {
        let n = rng.random_range(1..=20);
        let v = random_vector(&mut rng, n);
        ensure(s_minus(&v) <= s_plus(&v), || format!("S- > S+ for {v:?}"))?;
    }
    for _ in 0..CASES {
        let n = rng.random_range(1..=20);
        let v = random_vector(&mut rng, n);
        let s = s_cyclic_minus(&v);
        ensure(s == -1 || s % 2 == 0, || format!("odd cyclic variation {s} for {v:?}"))?;
    }
    for _ in 0..CASES {
        let n = rng.random_range(1..=20);
        let v = random_vector(&mut rng, n);
        let k = rng.random_range(0..v.len());
        let mut r = v.clone();
        r.rotate_left(k);
        ensure(s_cyclic_minus(&v) == s_cyclic_minus(&r) && s_cyclic_plus(&v) == s_cyclic_plus(&r), || {
            format!("rotation changes cyclic variation of {v:?}")
        })?;
    }
    let mut unimodal = 0;
    for _ in 0..CASES {
        let n = rng.random_range(2..=20);
        let v = if rng.random_bool(0.5) {
            relosc::tp::random_unimodal(n, &mut rng)
        } else {
            random_vector(&mut rng, n)
        };
        if v.iter().all(|&x| x == v[0]) {
            continue;
        }
        let by_rotation = is_unimodal_by_rotation(&v);
        let by_diff = s_cyclic_minus(&cyclic_diff(&v)) == 2;
        let by_levels = is_unimodal_by_level_sets(&v);
        ensure(by_rotation == by_diff && by_diff == by_levels, || {
            format!("unimodality tests disagree on {v:?}: {by_rotation} {by_diff} {by_levels}")
        })?;
        unimodal += by_diff as usize;
    }
    Ok(format!("4 x {CASES} cases, {unimodal} unimodal vectors in the equivalence suite"))
}

/// All integer vectors of length `n` over `alphabet`.
fn grid(n: usize, alphabet: &[i64]) -> Vec<Vec<i64>> {
    let k = alphabet.len();
    (0..k.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let x = alphabet[code % k];
                    code /= k;
                    x
                })
                .collect()
        })
        .collect()
}

fn circulant_int(v: &[i64], w: &[i64]) -> Vec<i64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| v[(i + n - j) % n] * w[j]).sum()).collect()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut disagreements = Vec::new();
    for n in 4..=6 {
        // every unimodal integer input over {0,1,2}; includes all rotated 0/1 steps
        let inputs: Vec<Vec<i64>> =
            grid(n, &[0, 1, 2]).into_iter().filter(|w| s_cyclic_minus(&cyclic_diff(w)) <= 2).collect();
        for v in grid(n, &[-1, 0, 1, 2]) {
            let exhaustive = inputs.iter().all(|w| s_cyclic_minus(&cyclic_diff(&circulant_int(&v, w))) <= 2);
            let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let certified = vb2_conditions(&vf).passes();
            if certified != exhaustive {
                disagreements.push((v, certified, exhaustive));
            }
            checked += 1;
        }
    }
    within(Duration::from_secs(120), start)?;
    let unsound = disagreements.iter().filter(|d| d.1 && !d.2).count();
    ensure(disagreements.is_empty(), || {
        let sample: Vec<_> = disagreements.iter().take(3).map(|d| format!("{:?} (conditions {}, exhaustive {})", d.0, d.1, d.2)).collect();
        format!(
            "{} of {checked} generators disagree ({unsound} pass the conditions but fail exhaustively), e.g. {}",
            disagreements.len(),
            sample.join(", ")
        )
    })?;
    Ok(format!("{checked} generators agree"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut symmetric = 0;
    for _ in 0..1000 {
        let a = rng.random_range(0.05..=0.95);
        let plant = PlantSpec::geometric(a, rng.random_range(0..=6), rng.random_range(0.0..=1.0)).unwrap();
        let period = rng.random_range(2..=20);
        let patterns = enumerate_unimodal_patterns(period).unwrap();
        let pattern = patterns[rng.random_range(0..patterns.len())].rotated(rng.random_range(0..period as i64));
        let u = signal_for_pattern(&pattern, plant.chi0).unwrap();
        let verdict = unimodality_invariance(&plant, &u, TOL).map_err(|e| e.to_string())?;
        ensure(verdict.preconditions_hold(), || format!("generated pair misses the hypotheses: {pattern}"))?;
        ensure(verdict.conclusions_hold(), || {
            format!("a={a} Pd={} pattern {pattern}: variations {} {} {:?}", plant.delay, verdict.diff_variation, verdict.output_variation, verdict.output_variation_plus)
        })?;
        symmetric += verdict.sign_symmetric as usize;
    }
    Ok(format!("1000 pairs ({symmetric} sign-symmetric), no violation"))
}

fn criterion_10() -> Outcome {
    let points = POINTS.lock().unwrap();
    ensure(!points.is_empty(), || "no points collected".into())?;
    for p in points.iter() {
        ensure(2 * p.pd <= p.period && p.period <= 2 * (p.pd + p.ps), || {
            format!("{}: Pd={} P={} outside [2Pd, 2(Pd+Ps)] with Ps={}", p.source, p.pd, p.period, p.ps)
        })?;
        ensure(!(p.pd < p.period && p.period < 2 * p.pd), || format!("{}: Pd={} P={} in the exclusion zone", p.source, p.pd, p.period))?;
    }
    let violations = *REPORTED_VIOLATIONS.lock().unwrap();
    ensure(violations == 0, || format!("analyzer reported {violations} violations"))?;
    let codes = EXIT_CODES.lock().unwrap();
    ensure(codes.iter().all(|&(_, c)| c != 2), || format!("exit codes {codes:?}"))?;
    Ok(format!("{} points with P >= Pd within bounds, exit codes {:?}", points.len(), codes.iter().map(|c| c.1).collect::<Vec<_>>()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fast-pole delay sweep point set", criterion_1),
        ("delay-9 periods and simulation", criterion_2),
        ("dead-zone threshold", criterion_3),
        ("maximum periods for a = 0.9 and a = 0.1", criterion_4),
        ("absence without delay", criterion_5),
        ("analyzer vs oracle on random plants", criterion_6),
        ("variation property suites", criterion_7),
        ("variation-bounding certificate vs exhaustive check", criterion_8),
        ("invariance on random plant/signal pairs", criterion_9),
        ("bound integrity", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
