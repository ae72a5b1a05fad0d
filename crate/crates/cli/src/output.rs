//! Result persistence: per-measurement CSV, JSON-lines report and run manifest.

use rgibbs::experiments::{Measurement, ScenarioReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

/// Bumped whenever the CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 10] = ["scenario", "d", "N", "seed", "observable", "value", "se", "bound_lo", "bound_hi", "pass"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub csv_schema_version: u32,
    pub scenario: String,
    pub master_seed: u64,
    pub threads: usize,
    /// Normalized configuration; `run` accepts this manifest in place of a config file.
    pub config: String,
    pub started: String,
    pub finished: String,
    pub wall_clock_seconds: f64,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub outputs: Vec<OutputFile>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Shortest round-trip float formatting keeps reruns byte-identical.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn csv_bytes(rows: &[Measurement]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for m in rows {
        w.write_record([
            m.scenario.clone(),
            m.d.to_string(),
            opt(&m.n),
            opt(&m.seed),
            m.observable.clone(),
            num(m.value),
            m.se.map(num).unwrap_or_default(),
            m.bound_lo.map(num).unwrap_or_default(),
            m.bound_hi.map(num).unwrap_or_default(),
            opt(&m.pass),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine<'a> {
    Check {
        scenario: &'a str,
        name: &'a str,
        pass: bool,
        measured: f64,
        threshold: f64,
        detail: &'a str,
    },
    Summary {
        scenario: &'a str,
        master_seed: u64,
        parameters: &'a serde_json::Value,
        checks: usize,
        failed: Vec<&'a str>,
        measurements: usize,
        passed: bool,
    },
}

pub fn jsonl_bytes(report: &ScenarioReport, parameters: &serde_json::Value) -> Vec<u8> {
    let mut out = Vec::new();
    for c in &report.checks {
        let line = ReportLine::Check {
            scenario: &report.scenario,
            name: &c.name,
            pass: c.pass,
            measured: c.measured,
            threshold: c.threshold,
            detail: &c.detail,
        };
        serde_json::to_writer(&mut out, &line).expect("report serializes");
        out.push(b'\n');
    }
    let summary = ReportLine::Summary {
        scenario: &report.scenario,
        master_seed: report.master_seed,
        parameters,
        checks: report.checks.len(),
        failed: report.failed_checks().iter().map(|c| c.name.as_str()).collect(),
        measurements: report.measurements.len(),
        passed: report.passed(),
    };
    serde_json::to_writer(&mut out, &summary).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Write `bytes` to `dir/name` and describe the result for the manifest.
pub fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<OutputFile> {
    std::fs::write(dir.join(name), bytes)?;
    Ok(OutputFile { file: name.into(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) })
}

pub fn manifest_path(dir: &Path, scenario: &str) -> PathBuf {
    dir.join(format!("{scenario}.manifest.json"))
}
