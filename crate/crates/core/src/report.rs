//! Serialisable report shapes shared by probes, analyses and experiments.
//!
//! Every probe or analysis renders to a [`ProbeReport`] JSON object with the
//! fixed keys `probe`, `center`, `radii`, `verdicts` and `constants`. Experiment
//! summaries are flat CSV tables of [`SummaryRow`]s with the columns
//! `experiment,quantity,target,measured,tolerance,verdict`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    /// `[x₀, t₀]`.
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    pub verdicts: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
}

impl ProbeReport {
    pub fn new(probe: impl Into<String>, center: [f64; 2], radii: Vec<f64>) -> Self {
        Self {
            probe: probe.into(),
            center,
            radii,
            verdicts: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn verdict(mut self, key: &str, value: impl ToString) -> Self {
        self.verdicts.insert(key.to_string(), value.to_string());
        self
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("probe reports always serialise")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub quantity: String,
    pub target: String,
    pub measured: f64,
    pub tolerance: String,
    pub verdict: Verdict,
}

impl SummaryRow {
    pub fn new(
        experiment: &str,
        quantity: &str,
        target: impl ToString,
        measured: f64,
        tolerance: impl ToString,
        pass: bool,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            quantity: quantity.to_string(),
            target: target.to_string(),
            measured,
            tolerance: tolerance.to_string(),
            verdict: Verdict::from_bool(pass),
        }
    }
}

pub const SUMMARY_HEADER: &str = "experiment,quantity,target,measured,tolerance,verdict";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.16e},{},{}",
            csv_field(&r.experiment),
            csv_field(&r.quantity),
            csv_field(&r.target),
            r.measured,
            csv_field(&r.tolerance),
            r.verdict
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_report_has_fixed_keys() {
        let r = ProbeReport::new("density", [0.0, 1.0], vec![0.5])
            .verdict("overall", Verdict::Pass)
            .constant("varrho", 0.25);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["center", "constants", "probe", "radii", "verdicts"]);
        assert_eq!(v["verdicts"]["overall"], "PASS");
    }

    #[test]
    fn summary_csv_quotes_commas() {
        let rows = vec![SummaryRow::new("e", "slope", "[1, 2]", 1.5, 0.05, true)];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "experiment,quantity,target,measured,tolerance,verdict\n\
             e,slope,\"[1, 2]\",1.5000000000000000e0,0.05,PASS\n"
        );
    }
}
