//! Number formatting and report serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analyzer::{
    verify_fixed_point, AbsenceVerdict, OscillationRecord, OscillationReport, PeriodBounds,
};
use crate::error::Result;
use crate::lti::{ImpulseResponse, PlantSpec};

/// Significant digits of every printed number.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`: shortest of fixed or exponent notation, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with numbers rounded to 12 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Everything `analyze` reports for one plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    #[serde(flatten)]
    pub report: OscillationReport,
    pub absence: Option<AbsenceVerdict>,
    pub exists_2pd: Option<bool>,
    pub chi0_threshold: Option<f64>,
    pub subharmonic_periods: Vec<usize>,
}

/// Re-verifies each record of a (possibly re-read) report and returns
/// whether every verdict is reproduced.
pub fn reverify(report: &OscillationReport, tol: f64) -> Result<bool> {
    let g0 = ImpulseResponse::from_spec(&report.plant)?;
    let plant = PlantSpec { g0, delay: report.pd, chi0: report.chi0 };
    for r in &report.records {
        match verify_fixed_point(&plant, &r.pattern, tol)? {
            Some(again) if again.flags == r.flags && again.period == r.period => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Records as CSV: `period,pattern,assumption2,sign_symmetric,unimodal,self_oscillation,waveform`.
pub fn write_records_csv<W: Write>(records: &[OscillationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["period", "pattern", "assumption2", "sign_symmetric", "unimodal", "self_oscillation", "waveform"])?;
    for r in records {
        let wave: Vec<String> = r.waveform.values().iter().map(|&x| fmt_num(x)).collect();
        w.write_record([
            r.period.to_string(),
            r.pattern.to_string(),
            r.flags.satisfies_assumption2.to_string(),
            r.flags.sign_symmetric.to_string(),
            r.flags.unimodal.to_string(),
            r.flags.is_self_oscillation.to_string(),
            wave.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SweepRow {
    pub pd: usize,
    pub chi0: String,
    pub period: usize,
    pub pattern: String,
    pub assumption2: bool,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["Pd", "chi0", "P", "pattern", "assumption2"])?;
    for r in rows {
        w.write_record([r.pd.to_string(), r.chi0.clone(), r.period.to_string(), r.pattern.clone(), r.assumption2.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Bound lines per delay: `Pd,lower,upper_general,upper_convex,Ps`.
pub fn write_bounds_csv<W: Write>(rows: &[(usize, Option<PeriodBounds>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["Pd", "lower", "upper_general", "upper_convex", "Ps"])?;
    for (pd, b) in rows {
        match b {
            Some(b) => w.write_record([
                pd.to_string(),
                b.lower.to_string(),
                b.upper_general.to_string(),
                b.upper_convex.map(|c| c.to_string()).unwrap_or_default(),
                b.ps.to_string(),
            ])?,
            None => w.write_record([pd.to_string(), String::new(), String::new(), String::new(), String::new()])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of records for terminal output.
pub fn summary_table(out: &AnalysisOutput) -> String {
    let r = &out.report;
    let plant = serde_json::to_string(&r.plant).unwrap_or_default();
    let mut s = format!("plant {plant}, Pd = {}, chi0 = {}\n", r.pd, fmt_num(r.chi0));
    if let Some(b) = &r.bounds {
        s += &format!(
            "bounds: {} <= P <= {} (Ps = {}){}\n",
            b.lower,
            b.upper_general,
            b.ps,
            b.upper_convex.map(|c| format!(", convex bound {c}")).unwrap_or_default()
        );
    }
    if let Some(a) = &out.absence {
        s += &format!("absence: {}\n", a.reason);
    }
    if r.records.is_empty() {
        s += "no oscillation found\n";
    } else {
        s += &format!("{:>4}  {:<24} {:>5} {:>5}\n", "P", "pattern", "A2", "sym");
        for rec in &r.records {
            s += &format!(
                "{:>4}  {:<24} {:>5} {:>5}\n",
                rec.period,
                rec.pattern.to_string(),
                rec.flags.satisfies_assumption2,
                rec.flags.sign_symmetric
            );
        }
    }
    if !r.violations.is_empty() {
        s += &format!("{} bound violation(s)\n", r.violations.len());
    }
    if !r.oracle_diff.is_empty() {
        s += &format!("{} oracle disagreement(s)\n", r.oracle_diff.len());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(0.88911 / (1.0 - 1e-6)), "0.889110889111");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_num(1e-5), "1e-05");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
    }

    #[test]
    fn json_rounding() {
        let mut v = serde_json::json!({"a": [1.0000000000001, 2], "b": {"c": 0.30000000000000004}});
        round_json(&mut v);
        assert_eq!(v, serde_json::json!({"a": [1.0, 2], "b": {"c": 0.3}}));
    }
}
