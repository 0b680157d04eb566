//! Rendering scenario results as CSV or JSON, and the run manifest.
//!
//! Records are JSON objects whose key order is the column order. Nested
//! objects become dotted CSV columns (`breakdown.fluctuation`); `null`
//! becomes an empty cell.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

/// Version of the CSV columns and JSON keys. Bump on any change to either.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub records: Vec<Map<String, Value>>,
    /// Scenario-level results such as fitted slopes.
    pub summary: Map<String, Value>,
    /// Human-readable lines for standard error.
    pub notes: Vec<String>,
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn render_csv(records: &[Map<String, Value>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header: Option<Vec<String>> = None;
    for record in records {
        let mut cells = Vec::new();
        flatten("", &Value::Object(record.clone()), &mut cells);
        let (names, values): (Vec<String>, Vec<String>) = cells.into_iter().unzip();
        match &header {
            None => {
                w.write_record(&names).map_err(csv_err)?;
                header = Some(names);
            }
            Some(h) if *h != names => {
                return Err(CliError::Config(format!("inconsistent columns: {names:?} vs {h:?}")));
            }
            Some(_) => {}
        }
        w.write_record(&values).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

/// The JSON data document. It holds only deterministic content, so equal
/// inputs give byte-identical files.
pub fn render_json(scenario: &str, parameters: &Map<String, Value>, seed: Option<u64>, report: &Report) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "seed": seed,
        "parameters": parameters,
        "records": report.records,
        "summary": report.summary,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn render_summary(scenario: &str, report: &Report) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "summary": report.summary,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
    s.push('\n');
    s
}

/// `results.csv` → `results.<suffix>.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(format!("{suffix}.json"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub struct ManifestInfo<'a> {
    pub scenario: &'a str,
    pub parameters: &'a Map<String, Value>,
    pub seed: Option<u64>,
    pub format: Format,
    pub config_file: Option<&'a Path>,
    pub data_files: Vec<PathBuf>,
    pub wall_time_seconds: f64,
    pub workers: usize,
}

pub fn render_manifest(info: &ManifestInfo) -> String {
    let files: Vec<String> = info.data_files.iter().map(|p| p.display().to_string()).collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": info.scenario,
        "seed": info.seed,
        "parameters": info.parameters,
        "format": info.format.extension(),
        "config_file": info.config_file.map(|p| p.display().to_string()),
        "data_files": files,
        "library_version": berryphase_core::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": info.wall_time_seconds,
        "workers": info.workers,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
    s.push('\n');
    s
}
