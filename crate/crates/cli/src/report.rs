//! Check results, run reports and their on-disk form.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::scenario::Scenario;

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    /// `value < threshold`.
    Below,
    /// `value >= threshold`.
    AtLeast,
    /// `|value - target| <= threshold`.
    Within { target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Residuals at the noise floor; the slope is undefined.
    Floor,
    /// The computation itself failed.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Equation tag, e.g. `"eq22"`.
    pub eq: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub relation: Relation,
    pub status: Status,
    pub pass: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl Check {
    pub fn new(name: &str, eq: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        let ok = match relation {
            Relation::Below => value < threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Within { target } => (value - target).abs() <= threshold,
        };
        let status = if ok { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            eq: eq.into(),
            value: value.is_finite().then_some(value),
            threshold,
            relation,
            status,
            pass: ok,
            details: Map::new(),
        }
    }

    pub fn below(name: &str, eq: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, eq, value, Relation::Below, threshold)
    }

    pub fn at_least(name: &str, eq: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, eq, value, Relation::AtLeast, threshold)
    }

    pub fn within(name: &str, eq: &str, value: f64, target: f64, threshold: f64) -> Self {
        Self::new(name, eq, value, Relation::Within { target }, threshold)
    }

    /// A check whose computation raised an error.
    pub fn failed(name: &str, eq: &str, relation: Relation, threshold: f64, err: &dyn std::fmt::Display) -> Self {
        let floor = err.to_string().contains("floor");
        let mut c = Self::new(name, eq, f64::NAN, relation, threshold);
        c.status = if floor { Status::Floor } else { Status::Error };
        c.pass = false;
        c.details.insert("error".into(), Value::String(err.to_string()));
        c
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

/// A file produced by a run, held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    /// CSV from a header and rows of numbers.
    pub fn csv(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> anyhow::Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format_number(*v)))?;
        }
        Ok(Self { name: name.into(), contents: w.into_inner()? })
    }
}

/// Integers without a fraction, other values in shortest round-trip form,
/// non-finite values as `nan`/`inf`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else if v.is_finite() {
        format!("{v:?}")
    } else {
        format!("{v}").to_lowercase()
    }
}

/// Everything a verification produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// Values reported without a pass/fail verdict.
    pub observations: Map<String, Value>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn observe(&mut self, key: &str, value: impl Serialize) {
        self.observations.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn artifact(&mut self, a: Artifact) {
        self.artifacts.push(a);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_clock_s: f64,
}

/// Serialized as `report.json`. Everything except `timing` is a
/// deterministic function of the scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub operation: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub observations: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

pub const REPORT_FILE: &str = "report.json";

impl RunReport {
    pub fn new(scenario: &Scenario, outcome: &Outcome, timing: Timing) -> Self {
        let mut artifacts: Vec<String> = outcome.artifacts.iter().map(|a| a.name.clone()).collect();
        artifacts.push(REPORT_FILE.into());
        Self {
            scenario: scenario.clone(),
            operation: scenario.operation.label().into(),
            seed: scenario.seed,
            pass: outcome.pass(),
            checks: outcome.checks.clone(),
            observations: outcome.observations.clone(),
            artifacts,
            timing,
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes the artifacts and the report into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, artifacts: &[Artifact]) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents)?;
        written.push(path);
    }
    let path = dir.join(REPORT_FILE);
    std::fs::write(&path, report.to_json()?)?;
    written.push(path);
    Ok(written)
}

/// The report with its `timing` field removed, for reproducibility checks.
pub fn strip_timing(report_json: &str) -> anyhow::Result<Value> {
    let mut v: Value = serde_json::from_str(report_json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    Ok(v)
}
