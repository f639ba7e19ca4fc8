//! Experiment outcomes, report.json and CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Comparison, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// Numbers keep 17 significant digits so they round-trip.
    pub fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    /// module.op that produced the numbers
    pub source: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, source: &'static str, columns: &[&'static str]) -> Self {
        Table { name: name.to_string(), source, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub value: f64,
    pub source: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// from the `[checks]` section rather than built into the experiment
    pub from_config: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: BTreeMap<String, Scalar>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn scalar(&mut self, key: &str, value: f64, source: &'static str) {
        self.summary.insert(key.to_string(), Scalar { value, source });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into(), from_config: false });
    }

    /// Applies the [checks] section of the config against the summary.
    pub fn apply_config_checks(&mut self, cfg: &ExperimentConfig) {
        for (key, cmp) in &cfg.checks {
            let name = format!("config:{key}");
            let Some(s) = self.summary.get(key) else {
                let keys: Vec<&str> = self.summary.keys().map(String::as_str).collect();
                let detail = format!("no summary value `{key}`; available: {}", keys.join(", "));
                self.checks.push(Check { name, passed: false, detail, from_config: true });
                continue;
            };
            let v = s.value;
            let (ok, detail) = match *cmp {
                Comparison::Approx(x) => {
                    let tol = cfg.tolerances.atol + cfg.tolerances.rtol * x.abs();
                    ((v - x).abs() <= tol, format!("{v} vs {x} (tolerance {tol:e})"))
                }
                Comparison::AtLeast(x) => (v >= x, format!("{v} >= {x}")),
                Comparison::AtMost(x) => (v <= x, format!("{v} <= {x}")),
            };
            self.checks.push(Check { name, passed: ok, detail, from_config: true });
        }
    }

    /// Exit status follows the config checks only; built-in checks are diagnostics.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.from_config).all(|c| c.passed)
    }

    pub fn builtin_passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.from_config).all(|c| c.passed)
    }
}

fn num(x: f64) -> Value {
    // JSON has no inf/nan; keep them visible as strings
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub struct Provenance {
    pub timestamp_unix: u64,
    pub wall_time_s: f64,
    pub workers: usize,
}

pub fn report_json(cfg: &ExperimentConfig, out: &Outcome, prov: &Provenance) -> Value {
    let summary: Map<String, Value> = out.summary.iter().map(|(k, s)| (k.clone(), json!({ "value": num(s.value), "source": s.source }))).collect();
    let tables: Map<String, Value> = out
        .tables
        .iter()
        .map(|t| (t.name.clone(), json!({ "file": format!("{}.csv", t.name), "source": t.source, "columns": t.columns, "rows": t.rows.len() })))
        .collect();
    let checks: Vec<Value> = out.checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail, "origin": if c.from_config { "config" } else { "builtin" } })).collect();
    json!({
        "experiment": cfg.experiment.name(),
        "config": cfg.echo(),
        "seed": cfg.seed,
        "results": { "summary": summary, "tables": tables, "notes": out.notes },
        "checks": checks,
        "passed": out.passed(),
        "builtin_passed": out.builtin_passed(),
        "provenance": {
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": prov.timestamp_unix,
            "wall_time_s": prov.wall_time_s,
            "workers": prov.workers,
        },
    })
}

pub fn write_all(dir: &Path, cfg: &ExperimentConfig, out: &Outcome, prov: &Provenance) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&report_json(cfg, out, prov)).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    for t in &out.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let x = 0.1f64 + 0.2;
        let s = Cell::Num(x).csv();
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
        assert_eq!(Cell::Num(f64::INFINITY).csv(), "inf");
        assert_eq!(Cell::Text("a,b".into()).csv(), "\"a,b\"");
        let mut t = Table::new("t", "x.y", &["M", "v"]);
        t.push(vec![8usize.into(), 1.5.into()]);
        assert_eq!(t.to_csv(), "M,v\n8,1.5000000000000000e0\n");
    }
}
