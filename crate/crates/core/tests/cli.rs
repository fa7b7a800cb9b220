use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relosc::analyzer::OscillationReport;
use relosc::report::{reverify, AnalysisOutput};

fn plant(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("plants").join(name)
}

fn relosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relosc")).args(args).output().expect("binary runs")
}

fn relosc_with_plant(verb: &str, file: &str, rest: &[&str]) -> Output {
    let path = plant(file);
    let mut args = vec![verb, "--plant", path.to_str().unwrap()];
    args.extend_from_slice(rest);
    relosc(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn field(rows: &[Vec<String>], key: &str) -> String {
    rows.iter().find(|r| r[0] == key).map(|r| r[1].clone()).unwrap_or_default()
}

#[test]
fn check_plant_verdicts() {
    let o = relosc_with_plant("check-plant", "undelayed.json", &["--format", "csv"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(field(&rows, "passes"), "true");
    assert_eq!(field(&rows, "convex"), "true");
    assert_eq!(field(&rows, "relative_degree"), "0");

    let o = relosc_with_plant("check-plant", "slow_pole_delay3.json", &["--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(field(&rows, "passes"), "true");
    assert_eq!(field(&rows, "delay"), "3");
    assert_eq!(field(&rows, "l1_norm"), "10");

    let o = relosc_with_plant("check-plant", "gapped_support.json", &["--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(field(&rows, "passes"), "false");
    assert_eq!(field(&rows, "support_connected"), "false");
}

#[test]
fn check_plant_json_reports_delay_from_relative_degree() {
    let spec = r#"{"version":1,"plant":{"kind":"rational","num":[1],"den":[1,-0.5]},"delay":2}"#;
    let o = relosc(&["check-plant", "--plant-inline", spec]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["relative_degree"], 1);
    assert_eq!(v["delay"], 3);
}

#[test]
fn malformed_input_exits_one() {
    let o = relosc(&["check-plant", "--plant-inline", "{\"version\":1}"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());

    let o = relosc(&["check-plant", "--plant-inline", r#"{"version":1,"plant":{"kind":"rational","num":[1],"den":[1,-2]}}"#]);
    assert_eq!(o.status.code(), Some(1));

    let o = relosc_with_plant("analyze", "gapped_support.json", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("theorems inapplicable"));

    let o = relosc_with_plant("oracle", "fast_pole_delay9.json", &["--period", "17"]);
    assert_eq!(o.status.code(), Some(1));

    let o = relosc_with_plant("sweep", "undelayed.json", &["--delays", "5..1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = relosc(&["frobnicate"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn analyze_delay_nine() {
    let o = relosc_with_plant("analyze", "fast_pole_delay9.json", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out: AnalysisOutput = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out.report.periods().into_iter().collect::<Vec<_>>(), vec![2, 6, 18]);
    assert!(out.report.violations.is_empty());
    assert!(out.report.oracle_diff.is_empty());
    assert_eq!(out.exists_2pd, Some(true));
    assert_eq!(out.subharmonic_periods, vec![18, 6, 2]);
}

#[test]
fn analyze_dead_zone_families() {
    let o = relosc_with_plant("analyze", "fast_pole_dead_zone.json", &["--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let found: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(found, vec![("2".into(), "-+".into()), ("6".into(), "---+++".into()), ("6".into(), "--0++0".into())]);
}

#[test]
fn analyze_undelayed_reports_absence() {
    let o = relosc_with_plant("analyze", "undelayed.json", &[]);
    assert!(o.status.success());
    let out: AnalysisOutput = serde_json::from_str(&stdout(&o)).unwrap();
    let absence = out.absence.expect("absence verdict");
    assert!(absence.applicable && absence.absent);
    assert!(out.report.records.iter().all(|r| !r.flags.satisfies_assumption2));
}

#[test]
fn report_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = relosc_with_plant("analyze", "slow_pole_delay3.json", &["--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("bounds:"));
    let text = std::fs::read_to_string(&path).unwrap();
    let report: OscillationReport = serde_json::from_str(&text).unwrap();
    assert!(!report.records.is_empty());
    assert!(reverify(&report, 1e-12).unwrap());

    let mut tampered = report.clone();
    tampered.chi0 = 10.0;
    assert!(!reverify(&tampered, 1e-12).unwrap());
}

fn sweep_to(dir: &Path, name: &str) -> (String, String) {
    let out = dir.join(name);
    let o = relosc_with_plant(
        "sweep",
        "undelayed.json",
        &["--delays", "1..12", "--pmax", "26", "--format", "csv", "--out", out.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let bounds = out.with_extension("bounds.csv");
    (std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(bounds).unwrap())
}

#[test]
fn sweep_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (first, first_bounds) = sweep_to(dir.path(), "a.csv");
    let (second, second_bounds) = sweep_to(dir.path(), "b.csv");
    assert_eq!(first, second);
    assert_eq!(first_bounds, second_bounds);
    assert!(first.starts_with("Pd,chi0,P,pattern,assumption2\n"));
    assert!(first.contains("\n12,0,24,------------++++++++++++,true\n"));

    let bounds = csv_rows(&first_bounds);
    assert_eq!(bounds.len(), 12);
    // Pd = 5: 2Pd, 2(Pd+Ps) with Ps = 1, and the convex bound 4Pd+2
    assert_eq!(bounds[4], vec!["5", "10", "12", "22", "1"]);
    assert_eq!(bounds[0][3], "");
}

#[test]
fn sweep_json_over_dead_zones() {
    let o = relosc_with_plant("sweep", "undelayed.json", &["--delays", "3", "--dead-zones", "0,0.8,0.9", "--pmax", "8"]);
    assert!(o.status.success());
    let cells: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let has_half_wave = |i: usize| cells[i]["records"].as_array().unwrap().iter().any(|r| r["pattern"] == "---+++");
    assert!(has_half_wave(0));
    assert!(has_half_wave(1));
    assert!(!has_half_wave(2));
}

#[test]
fn simulate_reaches_documented_periods() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = plant("delay9_seeds.txt");
    let traj = dir.path().join("traj");
    let o = relosc_with_plant(
        "simulate",
        "fast_pole_delay9.json",
        &["--seed-file", seeds.to_str().unwrap(), "--format", "csv", "--trajectories", traj.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let periods: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(periods, ["18", "6", "2"]);
    let files = std::fs::read_dir(&traj).unwrap().count();
    assert_eq!(files, 3);

    let seeds = plant("dead_zone_seeds.txt");
    let o = relosc_with_plant("simulate", "fast_pole_dead_zone.json", &["--seed-file", seeds.to_str().unwrap(), "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    let got: Vec<(&str, &str)> = rows.iter().map(|r| (r[1].as_str(), r[5].as_str())).collect();
    assert_eq!(got, [("6", "true"), ("6", "true"), ("6", "false"), ("2", "true")]);
}

#[test]
fn simulate_rejects_undelayed_plant() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.json");
    std::fs::write(&seeds, "[[1,-1]]").unwrap();
    let o = relosc_with_plant("simulate", "undelayed.json", &["--seed-file", seeds.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delay of at least 1"));
}

#[test]
fn oracle_lists_every_rotation() {
    let o = relosc_with_plant("oracle", "fast_pole_delay9.json", &["--period", "6", "--format", "csv"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let half_wave = rows.iter().filter(|r| r[1] == "---+++").count();
    assert_eq!(half_wave, 6);
    assert_eq!(rows.iter().filter(|r| r[1] == "-+-+-+").count(), 2);
}
