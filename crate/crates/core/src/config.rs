//! Plant-spec files and the defaults every command falls back on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{ImpulseResponse, ImpulseSpec, PlantSpec};
use crate::variation::SignPattern;

pub const PLANT_FILE_VERSION: u32 = 1;

/// Tolerances, caps and limits. Flags override individual fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    /// Certified truncation error of periodic summation.
    pub summation_tol: f64,
    /// Slack on the Assumption-1 monotonicity check.
    pub monotonicity_eps: f64,
    /// Tolerance on `u` in simulator period detection.
    pub period_tol: f64,
    /// Largest period for the exhaustive oracle.
    pub oracle_cap: usize,
    /// Largest period the analyzer diffs against the oracle.
    pub oracle_diff_max: usize,
    pub simulate_steps: usize,
    pub prune: bool,
}

pub const DEFAULTS: Defaults = Defaults {
    summation_tol: 1e-12,
    monotonicity_eps: 0.0,
    period_tol: 1e-9,
    oracle_cap: 16,
    oracle_diff_max: 12,
    simulate_steps: 200,
    prune: false,
};

/// `{"version": 1, "plant": {...}, "delay": Pd, "dead_zone": chi0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantFile {
    pub version: u32,
    pub plant: ImpulseSpec,
    #[serde(default)]
    pub delay: usize,
    #[serde(default)]
    pub dead_zone: f64,
}

impl PlantFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: PlantFile = serde_json::from_str(text)?;
        if file.version != PLANT_FILE_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported plant file version {} (expected {PLANT_FILE_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Plant with leading zero samples folded into the delay.
    pub fn to_plant(&self) -> Result<PlantSpec> {
        PlantSpec::new(ImpulseResponse::from_spec(&self.plant)?, self.delay, self.dead_zone)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Seeds as JSON (`[[1,-1], ...]` or `{"seeds": [...]}`) or as text with one
/// `++0--0` pattern per line; `#` starts a comment.
pub fn parse_seeds(text: &str) -> Result<Vec<Vec<i8>>> {
    #[derive(Deserialize)]
    struct Wrapped {
        seeds: Vec<Vec<i8>>,
    }
    let trimmed = text.trim_start();
    let seeds = if trimmed.starts_with('[') {
        serde_json::from_str::<Vec<Vec<i8>>>(text)?
    } else if trimmed.starts_with('{') {
        serde_json::from_str::<Wrapped>(text)?.seeds
    } else {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<SignPattern>().map(Vec::from))
            .collect::<Result<Vec<_>>>()?
    };
    if seeds.is_empty() {
        return Err(Error::InvalidInput("seed file holds no seeds".into()));
    }
    for s in &seeds {
        SignPattern::new(s.clone())?;
    }
    Ok(seeds)
}

/// `"1..12"` (inclusive), `"3"` or `"1,4,9"`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("cannot parse integer list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Comma-separated reals.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidInput(format!("cannot parse number {p:?}"))))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("empty number list {text:?}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_file_round_trip() {
        let text = r#"{"version":1,"plant":{"kind":"geometric","a":0.1},"delay":9,"dead_zone":0}"#;
        let f = PlantFile::parse(text).unwrap();
        assert_eq!(f.plant, ImpulseSpec::Geometric { a: 0.1, gain: 1.0 });
        assert_eq!(PlantFile::parse(&f.to_json()).unwrap(), f);
        let p = f.to_plant().unwrap();
        assert_eq!(p.delay, 9);

        let rat = r#"{"version":1,"plant":{"kind":"rational","num":[1],"den":[1,-0.9]},"delay":2}"#;
        assert_eq!(PlantFile::parse(rat).unwrap().to_plant().unwrap().delay, 3);
        assert!(PlantFile::parse(r#"{"version":2,"plant":{"kind":"samples","values":[1]}}"#).is_err());
        assert!(PlantFile::parse(r#"{"version":1,"plant":{"kind":"cubic"}}"#).is_err());
        assert!(PlantFile::parse(r#"{"version":1,"plant":{"kind":"samples","values":[1]},"dead_zone":-1}"#)
            .unwrap()
            .to_plant()
            .is_err());
    }

    #[test]
    fn seed_formats() {
        assert_eq!(parse_seeds("[[1,-1],[0,1,1]]").unwrap(), vec![vec![1, -1], vec![0, 1, 1]]);
        assert_eq!(parse_seeds(r#"{"seeds":[[1]]}"#).unwrap(), vec![vec![1]]);
        assert_eq!(parse_seeds("# seeds\n+++---\n+-  # short\n").unwrap(), vec![vec![1, 1, 1, -1, -1, -1], vec![1, -1]]);
        assert!(parse_seeds("[[2]]").is_err());
        assert!(parse_seeds("\n").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_usize_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_usize_list("1..=2,7").unwrap(), vec![1, 2, 7]);
        assert!(parse_usize_list("4..1").is_err());
        assert_eq!(parse_f64_list("0, 0.5").unwrap(), vec![0.0, 0.5]);
        assert!(parse_f64_list("x").is_err());
    }
}
