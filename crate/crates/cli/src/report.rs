//! Machine-readable reports and their JSON / CSV / table renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use formal_kms::Scalar;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const SCHEMA: &str = include_str!("../schema/report.schema.json");

/// A complex value: exact parts as `"num/den"` strings, or a float pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Exact([String; 2]),
    Float([f64; 2]),
}

impl Value {
    pub fn of<S: Scalar>(s: &S) -> Self {
        match s.exact_parts() {
            Some((re, im)) => Value::Exact([re, im]),
            None => {
                let z = s.to_c64();
                Value::Float([z.re, z.im])
            }
        }
    }
}

/// Residual at one λ-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderResidual {
    pub order: usize,
    /// The residual itself when it is a number.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<Value>,
    /// The residual when it is a function, printed in full.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub function: Option<String>,
    pub exact_zero: bool,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// Every order vanishes (exactly, or within the tolerance).
    Zero,
    /// Negative control: some order must be nonzero.
    Nonzero,
    /// A scalar comparison described in `detail`.
    Property,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    /// `"exact"`.
    Exact(String),
    Float(f64),
}

impl Tolerance {
    pub fn exact() -> Self {
        Tolerance::Exact("exact".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub id: String,
    pub suite: String,
    /// What is being checked, in words.
    pub anchor: String,
    pub parameters: BTreeMap<String, String>,
    /// Residual of the worst probe, per λ-order.
    pub residual: Vec<OrderResidual>,
    /// Number values in `residual` carry an extra factor `(2π)^two_pi_power`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub two_pi_power: Option<u32>,
    /// Scalar diagnostic for property checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scalar: Option<f64>,
    pub probes: usize,
    pub expectation: Expectation,
    pub tolerance: Tolerance,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullspaceRecord {
    pub beta: String,
    pub n_test: i32,
    pub n_mu: i32,
    pub rel_tol: f64,
    pub rows: usize,
    pub columns: usize,
    pub dimension: usize,
    pub expected_dimension: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `null` when nothing was discarded (infinite gap).
    pub gap_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boltzmann_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovery_error: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Wall-clock data, excluded from reproducibility comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub generated_at: String,
    pub total_ms: f64,
    pub check_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: String,
    pub scenario: String,
    pub description: String,
    pub phase_space: String,
    pub arithmetic: String,
    pub seed: u64,
    pub truncation: usize,
    pub suites: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub nullspace: Vec<NullspaceRecord>,
    pub summary: Summary,
    pub timing: Timing,
}

impl Report {
    pub fn success(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// The JSON with the `timing` section blanked, for reproducibility checks.
    pub fn to_reproducible_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        copy.to_json()
    }

    /// Parses a report and checks that it re-serializes to the same document.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let report: Report = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(CliError::Report(format!(
                "schema version {} is not {SCHEMA_VERSION}",
                report.schema_version
            )));
        }
        let original: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        let again = serde_json::to_value(&report).expect("reports serialize");
        if original != again {
            return Err(CliError::Report("report does not round-trip through the schema".into()));
        }
        Ok(report)
    }

    pub fn checks_csv(&self) -> String {
        let order = self.truncation;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["scenario".to_string(), "id".into(), "parameters".into()];
        header.extend((0..=order).map(|k| format!("lambda{k}")));
        header.extend(["scalar".into(), "tolerance".into(), "passed".into(), "error".into()]);
        w.write_record(&header).expect("in-memory csv");
        for c in &self.checks {
            let mut row = vec![self.scenario.clone(), c.id.clone(), params_text(&c.parameters)];
            for k in 0..=order {
                row.push(c.residual.iter().find(|r| r.order == k).map(residual_text).unwrap_or_default());
            }
            row.push(c.scalar.map(|s| format!("{s:e}")).unwrap_or_default());
            row.push(tolerance_text(&c.tolerance));
            row.push(c.passed.to_string());
            row.push(c.error.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
    }

    /// Singular values of every nullspace run, descending within each run.
    pub fn spectrum_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "beta", "index", "singular_value"]).expect("in-memory csv");
        for run in &self.nullspace {
            for (i, s) in run.singular_values.iter().enumerate() {
                w.write_record([self.scenario.clone(), run.beta.clone(), i.to_string(), format!("{s:e}")])
                    .expect("in-memory csv");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
    }

    pub fn table(&self) -> String {
        let order = self.truncation;
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["check".to_string(), "parameters".into()];
        header.extend((0..=order).map(|k| format!("λ^{k}")));
        header.push("result".into());
        rows.push(header);
        for c in &self.checks {
            let mut row = vec![c.id.clone(), params_text(&c.parameters)];
            for k in 0..=order {
                row.push(c.residual.iter().find(|r| r.order == k).map(short_residual).unwrap_or_else(|| "·".into()));
            }
            let result = if c.passed { "pass" } else { "FAIL" };
            row.push(match (&c.error, c.scalar) {
                (Some(e), _) => format!("{result} ({e})"),
                (None, Some(s)) => format!("{result} [{s:.3e}]"),
                _ => result.to_string(),
            });
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r.get(j).map_or(0, |s| s.chars().count())).max().unwrap_or(0))
            .collect();
        let mut out = format!("scenario {} (seed {}, K = {})\n", self.scenario, self.seed, self.truncation);
        for row in &rows {
            let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for run in &self.nullspace {
            let _ = writeln!(
                out,
                "nullspace β = {}: dimension {} (expected {}), gap {}, {}",
                run.beta,
                run.dimension,
                run.expected_dimension,
                run.gap_ratio.map_or("∞".into(), |g| format!("{g:.3e}")),
                run.verdict
            );
        }
        let _ = writeln!(out, "{} checks, {} passed, {} failed", self.summary.total, self.summary.passed, self.summary.failed);
        out
    }
}

fn params_text(p: &BTreeMap<String, String>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn tolerance_text(t: &Tolerance) -> String {
    match t {
        Tolerance::Exact(s) => s.clone(),
        Tolerance::Float(x) => format!("{x:e}"),
    }
}

fn residual_text(r: &OrderResidual) -> String {
    match (&r.value, &r.function) {
        (Some(Value::Exact([re, im])), _) => format!("{re}+{im}i"),
        (Some(Value::Float([re, im])), _) => format!("{re:e}+{im:e}i"),
        (None, Some(f)) => f.clone(),
        _ => String::new(),
    }
}

fn short_residual(r: &OrderResidual) -> String {
    if r.exact_zero {
        "0".into()
    } else {
        format!("{:.2e}", r.max_abs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(format!("unknown format '{other}' (json, csv, table)")),
        }
    }
}

/// Writes the report into `dir`; returns the files written.
pub fn emit(report: &Report, format: Format, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?;
    let files: Vec<(String, String)> = match format {
        Format::Json => vec![(format!("{}.json", report.scenario), report.to_json())],
        Format::Csv => vec![
            (format!("{}.checks.csv", report.scenario), report.checks_csv()),
            (format!("{}.spectrum.csv", report.scenario), report.spectrum_csv()),
        ],
        Format::Table => vec![(format!("{}.txt", report.scenario), report.table())],
    };
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        written.push(path);
    }
    Ok(written)
}
