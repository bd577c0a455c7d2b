//! Report tables, per-check files and the run manifest.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wienerlab::report::{fmt_num, CsvTable};

/// A table of preformatted cells, rendered as CSV and JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.headers.len(), "row width");
        self.rows.push(row);
    }

    /// Appends the rows of a CSV rendering with the same header.
    pub fn extend_csv(&mut self, prefix: &[String], csv: &str) {
        for line in csv.lines().skip(1) {
            let mut row = prefix.to_vec();
            row.extend(line.split(',').map(str::to_string));
            self.push(row);
        }
    }

    pub fn to_csv(&self) -> String {
        let headers: Vec<&str> = self.headers.iter().map(String::as_str).collect();
        let mut t = CsvTable::new(&headers);
        for r in &self.rows {
            t.push(r.clone());
        }
        t.render()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.headers.iter().cloned().zip(r.iter().map(|c| json!(c))).collect()))
            .collect();
        json!({ "columns": self.headers, "rows": rows })
    }
}

pub fn num(x: f64) -> String {
    fmt_num(x)
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

/// Result of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutput {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub table: Table,
}

impl CheckOutput {
    /// A single line `PASS|FAIL name: detail`.
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub csv: String,
    pub json: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_id: String,
    pub operation: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub checks: Vec<CheckSummary>,
    pub pass: bool,
}

/// Check name with characters outside `[A-Za-z0-9._-]` replaced by `_`.
pub fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

/// Writes `<stem>.csv` and `<stem>.json` for every check and returns the
/// manifest entries, with paths relative to `dir`.
pub fn write_checks(dir: &Path, checks: &[CheckOutput]) -> anyhow::Result<Vec<CheckSummary>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Vec::with_capacity(checks.len());
    for c in checks {
        let stem = file_stem(&c.name);
        let csv = format!("{stem}.csv");
        let js = format!("{stem}.json");
        std::fs::write(dir.join(&csv), c.table.to_csv()).with_context(|| format!("writing {csv}"))?;
        let body = json!({ "name": c.name, "pass": c.pass, "detail": c.detail, "table": c.table.to_json() });
        std::fs::write(dir.join(&js), serde_json::to_string_pretty(&body)?).with_context(|| format!("writing {js}"))?;
        out.push(CheckSummary { name: c.name.clone(), pass: c.pass, detail: c.detail.clone(), csv, json: js });
    }
    Ok(out)
}
