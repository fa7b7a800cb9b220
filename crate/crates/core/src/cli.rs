//! `relosc` command line.
//!
//! Exit codes: 0 analysis complete (absence included), 1 invalid input,
//! 2 internal assertion or bound violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analyzer::{
    brute_force_fixed_points, check_absence, chi0_threshold, default_pmax, exists_2pd,
    find_oscillations, oracle_diff, subharmonic_periods, AnalysisOptions, OscillationReport,
};
use crate::config::{parse_f64_list, parse_seeds, parse_usize_list, PlantFile, DEFAULTS};
use crate::error::{Error, Result};
use crate::lti::{is_convex_on_support, relative_degree, verify_assumption1, PlantSpec};
use crate::report::{
    fmt_num, summary_table, to_json_string, write_bounds_csv, write_records_csv, write_sweep_csv,
    AnalysisOutput, SweepRow,
};
use crate::simulator::{classify, detect_period, simulate, SimulationOptions};
use crate::variation::s_cyclic_plus;

#[derive(Debug, Parser)]
#[command(name = "relosc", version, about = "Self-oscillation analysis for discrete-time relay feedback with a dead zone")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check monotonicity, convexity and delay factorization of a plant.
    CheckPlant(PlantArgs),
    /// Enumerate and verify oscillations, with bounds and an oracle diff.
    Analyze(AnalyzeArgs),
    /// (Pd, P) points over a grid of delays and dead zones.
    Sweep(SweepArgs),
    /// Simulate the closed loop from seed histories.
    Simulate(SimulateArgs),
    /// Exhaustive fixed-point listing for one period.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct PlantArgs {
    /// Plant-spec JSON file.
    #[arg(long, conflicts_with = "plant_inline")]
    pub plant: Option<PathBuf>,
    /// Plant-spec JSON given inline.
    #[arg(long)]
    pub plant_inline: Option<String>,
    /// Overrides the file's delay.
    #[arg(long)]
    pub delay: Option<usize>,
    /// Overrides the file's dead zone.
    #[arg(long)]
    pub dead_zone: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Periodic-summation tolerance.
    #[arg(long, default_value_t = DEFAULTS.summation_tol)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Largest period searched; defaults to 2(Pd+Ps) rounded up to even, plus 2.
    #[arg(long)]
    pub pmax: Option<usize>,
    /// Largest period compared against the exhaustive oracle.
    #[arg(long, default_value_t = DEFAULTS.oracle_diff_max)]
    pub oracle_cap: usize,
    /// Skip zero-free patterns that are not sign-symmetric.
    #[arg(long)]
    pub prune: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Delays, e.g. `1..12` or `1,3,9`.
    #[arg(long)]
    pub delays: String,
    /// Dead zones, e.g. `0,0.8`; defaults to the plant file's.
    #[arg(long)]
    pub dead_zones: Option<String>,
    #[arg(long)]
    pub pmax: Option<usize>,
    /// Bound-lines file; defaults to `<out>.bounds.csv` when `--out` is given.
    #[arg(long)]
    pub bounds_out: Option<PathBuf>,
    #[arg(long)]
    pub prune: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Seeds: JSON list of sign lists, or one `++0--0` pattern per line.
    #[arg(long)]
    pub seed_file: PathBuf,
    #[arg(long, default_value_t = DEFAULTS.simulate_steps)]
    pub steps: usize,
    /// Tolerance on `u` for period detection.
    #[arg(long, default_value_t = DEFAULTS.period_tol)]
    pub period_tol: f64,
    /// Directory receiving one trajectory CSV per seed.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    #[arg(long)]
    pub period: usize,
    #[arg(long, default_value_t = DEFAULTS.oracle_cap)]
    pub oracle_cap: usize,
}

/// Error that carries its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

fn violation(message: String) -> Failure {
    Failure { code: 2, message }
}

impl PlantArgs {
    fn file(&self) -> Result<PlantFile> {
        let mut f = match (&self.plant, &self.plant_inline) {
            (Some(p), _) => PlantFile::load(p)?,
            (None, Some(text)) => PlantFile::parse(text)?,
            (None, None) => return Err(Error::InvalidInput("either --plant or --plant-inline is required".into())),
        };
        if let Some(d) = self.delay {
            f.delay = d;
        }
        if let Some(c) = self.dead_zone {
            f.dead_zone = c;
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("--tol must be positive".into()));
        }
        Ok(f)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("utf8"))
}

#[derive(Serialize)]
struct PlantCheck {
    kind: &'static str,
    relative_degree: usize,
    delay: usize,
    dead_zone: f64,
    assumption1: crate::lti::Assumption1Verdict,
    passes: bool,
    convex: bool,
    l1_norm: f64,
    l1_error: f64,
}

fn cmd_check_plant(args: &PlantArgs) -> std::result::Result<(), Failure> {
    let file = args.file()?;
    let g = crate::lti::ImpulseResponse::from_spec(&file.plant)?;
    let rd = relative_degree(&g)?;
    let plant = file.to_plant()?;
    let verdict = verify_assumption1(&plant.g0, DEFAULTS.monotonicity_eps);
    let (l1, l1_err) = plant.g0.l1_norm();
    let check = PlantCheck {
        kind: plant.g0.kind_name(),
        relative_degree: rd,
        delay: plant.delay,
        dead_zone: plant.chi0,
        passes: verdict.passes(),
        convex: verdict.passes() && is_convex_on_support(&plant.g0, None),
        assumption1: verdict,
        l1_norm: l1,
        l1_error: l1_err,
    };
    let text = match args.format {
        Format::Json => to_json_string(&check)? + "\n",
        Format::Csv => csv_string(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["field", "value"]).map_err(Error::from)?;
            let a = &check.assumption1;
            let rows = [
                ("kind", check.kind.to_string()),
                ("relative_degree", rd.to_string()),
                ("delay", check.delay.to_string()),
                ("dead_zone", fmt_num(check.dead_zone)),
                ("passes", check.passes.to_string()),
                ("l1_summable", a.l1_summable.to_string()),
                ("support_connected", a.support_connected.to_string()),
                ("strictly_decreasing", a.strictly_decreasing.to_string()),
                ("strictly_positive", a.strictly_positive.to_string()),
                ("convex", check.convex.to_string()),
                ("l1_norm", fmt_num(check.l1_norm)),
            ];
            for (k, v) in rows {
                w.write_record([k, v.as_str()]).map_err(Error::from)?;
            }
            w.flush()?;
            Ok(())
        })?,
    };
    args.emit(&text)?;
    Ok(())
}

fn analyze_plant(plant: &PlantSpec, pmax: Option<usize>, prune: bool, oracle_cap: usize, tol: f64) -> std::result::Result<AnalysisOutput, Failure> {
    let verdict = verify_assumption1(&plant.g0, DEFAULTS.monotonicity_eps);
    if !verdict.passes() {
        let mut reasons = Vec::new();
        if !verdict.support_connected {
            reasons.push("support not connected");
        }
        if !verdict.strictly_decreasing {
            reasons.push("not strictly decreasing");
        }
        if !verdict.strictly_positive {
            reasons.push("not positive");
        }
        if verdict.tail == crate::lti::TailStatus::Undecidable {
            reasons.push("undecidable beyond the checked horizon");
        }
        return Err(Failure { code: 1, message: format!("theorems inapplicable: {}", reasons.join(", ")) });
    }
    let pmax = match pmax {
        Some(p) => p,
        None => default_pmax(plant)?,
    };
    let mut report = find_oscillations(plant, &AnalysisOptions { pmax, prune, tol })?;
    report.oracle_diff = oracle_diff(plant, &report.records, pmax, oracle_cap, tol)?;
    let (absence, e2, thr) = if plant.delay == 0 {
        (Some(check_absence(plant, None, tol)?), None, None)
    } else {
        (None, Some(exists_2pd(plant)?), Some(chi0_threshold(plant)?))
    };
    Ok(AnalysisOutput {
        report,
        absence,
        exists_2pd: e2,
        chi0_threshold: thr,
        subharmonic_periods: subharmonic_periods(plant.delay),
    })
}

fn check_integrity(r: &OscillationReport) -> std::result::Result<(), Failure> {
    if !r.violations.is_empty() {
        return Err(violation(format!("{} bound violation(s): {:?}", r.violations.len(), r.violations)));
    }
    if !r.oracle_diff.is_empty() {
        return Err(violation(format!("analyzer and oracle disagree: {:?}", r.oracle_diff)));
    }
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> std::result::Result<(), Failure> {
    let file = args.plant.file()?;
    let plant = file.to_plant()?;
    let out = analyze_plant(&plant, args.pmax, args.prune || DEFAULTS.prune, args.oracle_cap, args.plant.tol)?;
    let text = match args.plant.format {
        Format::Json => to_json_string(&out)? + "\n",
        Format::Csv => csv_string(|buf| write_records_csv(&out.report.records, buf))?,
    };
    if args.plant.out.is_some() {
        args.plant.emit(&text)?;
        print!("{}", summary_table(&out));
    } else {
        args.plant.emit(&text)?;
        eprint!("{}", summary_table(&out));
    }
    check_integrity(&out.report)
}

#[derive(Serialize)]
struct SweepCell {
    pd: usize,
    chi0: f64,
    pmax: usize,
    bounds: Option<crate::analyzer::PeriodBounds>,
    records: Vec<SweepRow>,
    violations: usize,
}

fn cmd_sweep(args: &SweepArgs) -> std::result::Result<(), Failure> {
    let file = args.plant.file()?;
    let delays = parse_usize_list(&args.delays)?;
    let zones = match &args.dead_zones {
        Some(z) => parse_f64_list(z)?,
        None => vec![file.dead_zone],
    };
    let base = file.to_plant()?;
    let verdict = verify_assumption1(&base.g0, DEFAULTS.monotonicity_eps);
    if !verdict.passes() {
        return Err(Failure { code: 1, message: "theorems inapplicable: plant fails the monotonicity check".into() });
    }
    // delays given on the command line replace the file's, on top of any
    // relative degree of the transfer function
    let rd = base.delay - file.delay;
    let cells: Vec<(usize, f64)> = zones.iter().flat_map(|&c| delays.iter().map(move |&d| (d, c))).collect();
    let results: Vec<std::result::Result<SweepCell, Failure>> = cells
        .par_iter()
        .map(|&(d, chi0)| {
            let plant = base.with_delay(d + rd).with_dead_zone(chi0)?;
            let pmax = match args.pmax {
                Some(p) => p,
                None => default_pmax(&plant)?,
            };
            let report = find_oscillations(&plant, &AnalysisOptions { pmax, prune: args.prune, tol: args.plant.tol })?;
            let chi0_text = fmt_num(chi0);
            Ok(SweepCell {
                pd: plant.delay,
                chi0,
                pmax,
                bounds: report.bounds.clone(),
                violations: report.violations.len(),
                records: report
                    .records
                    .iter()
                    .map(|r| SweepRow {
                        pd: plant.delay,
                        chi0: chi0_text.clone(),
                        period: r.period,
                        pattern: r.pattern.to_string(),
                        assumption2: r.flags.satisfies_assumption2,
                    })
                    .collect(),
            })
        })
        .collect();
    let mut sweep = Vec::new();
    for r in results {
        sweep.push(r?);
    }
    let mut rows: Vec<SweepRow> = sweep.iter().flat_map(|c| c.records.iter().cloned()).collect();
    rows.sort();
    let text = match args.plant.format {
        Format::Json => to_json_string(&sweep)? + "\n",
        Format::Csv => csv_string(|buf| write_sweep_csv(&rows, buf))?,
    };
    args.plant.emit(&text)?;
    let bounds_path = args
        .bounds_out
        .clone()
        .or_else(|| args.plant.out.as_ref().map(|p| bounds_sibling(p)));
    if let Some(p) = bounds_path {
        let mut seen = std::collections::BTreeMap::new();
        for c in &sweep {
            seen.entry(c.pd).or_insert_with(|| c.bounds.clone());
        }
        let lines: Vec<_> = seen.into_iter().collect();
        fs::write(p, csv_string(|buf| write_bounds_csv(&lines, buf))?).map_err(Error::from)?;
    }
    let bad: usize = sweep.iter().map(|c| c.violations).sum();
    if bad > 0 {
        return Err(violation(format!("{bad} bound violation(s) in sweep")));
    }
    Ok(())
}

fn bounds_sibling(p: &Path) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    p.with_file_name(format!("{stem}.bounds.csv"))
}

#[derive(Serialize)]
struct SeedResult {
    seed: String,
    period: Option<usize>,
    phase: Option<usize>,
    pattern: Option<String>,
    self_oscillation: Option<bool>,
    assumption2: Option<bool>,
    sign_symmetric: Option<bool>,
    error: Option<String>,
}

fn cmd_simulate(args: &SimulateArgs) -> std::result::Result<(), Failure> {
    let file = args.plant.file()?;
    let plant = file.to_plant()?;
    let seeds = parse_seeds(&fs::read_to_string(&args.seed_file).map_err(Error::from)?)?;
    if let Some(dir) = &args.trajectories {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    let opts = SimulationOptions::default();
    let rows: Vec<std::result::Result<SeedResult, Failure>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let label = crate::variation::SignPattern::new(seed.clone())?.to_string();
            let mut row = SeedResult {
                seed: label,
                period: None,
                phase: None,
                pattern: None,
                self_oscillation: None,
                assumption2: None,
                sign_symmetric: None,
                error: None,
            };
            match simulate(&plant, seed, args.steps, &opts) {
                Err(e @ Error::Divergence { .. }) => row.error = Some(e.to_string()),
                Err(e) => return Err(e.into()),
                Ok(traj) => {
                    if let Some(dir) = &args.trajectories {
                        let f = fs::File::create(dir.join(format!("seed_{i}.csv"))).map_err(Error::from)?;
                        traj.write_csv(f)?;
                    }
                    if let Some(ss) = detect_period(&traj, args.period_tol) {
                        let c = classify(&ss.waveform, plant.chi0)?;
                        row.period = Some(ss.period);
                        row.phase = Some(ss.phase);
                        row.pattern = Some(ss.pattern.to_string());
                        row.self_oscillation = Some(c.is_self_oscillation);
                        row.assumption2 = Some(c.satisfies_assumption2);
                        row.sign_symmetric = Some(c.sign_symmetric);
                    }
                }
            }
            Ok(row)
        })
        .collect();
    let mut table = Vec::new();
    for r in rows {
        table.push(r?);
    }
    let text = match args.plant.format {
        Format::Json => to_json_string(&table)? + "\n",
        Format::Csv => csv_string(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["seed", "period", "phase", "pattern", "self_oscillation", "assumption2", "sign_symmetric", "error"])
                .map_err(Error::from)?;
            let opt = |x: Option<String>| x.unwrap_or_default();
            for r in &table {
                w.write_record([
                    r.seed.clone(),
                    opt(r.period.map(|x| x.to_string())),
                    opt(r.phase.map(|x| x.to_string())),
                    opt(r.pattern.clone()),
                    opt(r.self_oscillation.map(|x| x.to_string())),
                    opt(r.assumption2.map(|x| x.to_string())),
                    opt(r.sign_symmetric.map(|x| x.to_string())),
                    opt(r.error.clone()),
                ])
                .map_err(Error::from)?;
            }
            w.flush()?;
            Ok(())
        })?,
    };
    args.plant.emit(&text)?;
    Ok(())
}

#[derive(Serialize)]
struct OracleListing {
    period: usize,
    fixed_points: Vec<OracleEntry>,
    analyzer_only: Vec<String>,
    oracle_only: Vec<String>,
}

#[derive(Serialize)]
struct OracleEntry {
    pattern: String,
    canonical: String,
    relay_variation_two: bool,
    assumption2: bool,
}

fn cmd_oracle(args: &OracleArgs) -> std::result::Result<(), Failure> {
    let file = args.plant.file()?;
    let plant = file.to_plant()?;
    if args.period > args.oracle_cap {
        return Err(Error::OracleCapExceeded { period: args.period, cap: args.oracle_cap }.into());
    }
    let tol = args.plant.tol;
    let found = brute_force_fixed_points(&plant, args.period, args.oracle_cap, tol)?;
    let mut entries = Vec::new();
    for s in &found {
        let rec = crate::analyzer::verify_fixed_point(&plant, s, tol)?;
        entries.push(OracleEntry {
            pattern: s.to_string(),
            canonical: s.canonical().to_string(),
            relay_variation_two: s_cyclic_plus(s.entries()) == 2,
            assumption2: rec.is_some_and(|r| r.flags.satisfies_assumption2),
        });
    }
    let (mut analyzer_only, mut oracle_only) = (Vec::new(), Vec::new());
    if args.period >= 2 {
        let report = find_oscillations(&plant, &AnalysisOptions { pmax: args.period, prune: false, tol })?;
        let records: Vec<_> = report.records.into_iter().filter(|r| r.period == args.period).collect();
        for d in oracle_diff(&plant, &records, args.period, args.oracle_cap, tol)?.into_iter().filter(|d| d.period == args.period) {
            match d.side {
                crate::analyzer::DiffSide::AnalyzerOnly => analyzer_only.push(d.pattern.to_string()),
                crate::analyzer::DiffSide::OracleOnly => oracle_only.push(d.pattern.to_string()),
            }
        }
    }
    let disagree = !analyzer_only.is_empty() || !oracle_only.is_empty();
    let listing = OracleListing { period: args.period, fixed_points: entries, analyzer_only, oracle_only };
    let text = match args.plant.format {
        Format::Json => to_json_string(&listing)? + "\n",
        Format::Csv => csv_string(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["pattern", "canonical", "relay_variation_two", "assumption2"]).map_err(Error::from)?;
            for e in &listing.fixed_points {
                w.write_record([e.pattern.clone(), e.canonical.clone(), e.relay_variation_two.to_string(), e.assumption2.to_string()])
                    .map_err(Error::from)?;
            }
            w.flush()?;
            Ok(())
        })?,
    };
    args.plant.emit(&text)?;
    if disagree {
        return Err(violation("analyzer and oracle disagree".into()));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::CheckPlant(a) => cmd_check_plant(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("relosc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
