//! Experiment runner for the berryphase scenario catalog.

pub mod averaging;
pub mod error;
pub mod output;
pub mod params;
pub mod scenarios;

use std::path::PathBuf;
use std::time::Instant;

use serde_json::Value;

pub use error::{CliError, Result};
pub use output::{Format, SCHEMA_VERSION};
pub use scenarios::Scenario;

use output::{render_csv, render_json, render_manifest, render_summary, sibling, write_file, ManifestInfo};
use params::Params;

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "BERRYPHASE_WORKERS";

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub scenario: String,
    pub config: Option<PathBuf>,
    /// `key=value` assignments applied over the config file.
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    /// Data file; results go to standard output when absent.
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub format: Format,
    /// The rendered data file.
    pub data: String,
    /// Files written, data file first.
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Sizes the global thread pool from [`WORKERS_ENV`] and returns the worker
/// count in effect.
pub fn configure_workers() -> Result<usize> {
    if let Ok(text) = std::env::var(WORKERS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{text}`")))?;
        // a pool that already exists (tests, repeated calls) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn resolve_format(req: &RunRequest) -> Format {
    req.format.unwrap_or_else(|| match req.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn seed_from(value: Value) -> Result<u64> {
    value
        .as_u64()
        .ok_or_else(|| CliError::Config(format!("`seed` must be a nonnegative integer, got {value}")))
}

/// Runs one scenario and writes its data file, a summary sidecar for CSV
/// output, and a manifest. Without `out` nothing is written and the caller
/// prints `data`.
pub fn run(req: &RunRequest) -> Result<RunOutcome> {
    let start = Instant::now();
    let scenario: Scenario = req.scenario.parse()?;
    let mut params = match &req.config {
        Some(path) => Params::load(path)?,
        None => Params::new(),
    };
    for o in &req.overrides {
        params.set_override(o)?;
    }
    if let Some(named) = params.take_reserved("scenario") {
        if named.as_str() != Some(scenario.name()) {
            return Err(CliError::Config(format!("config is for scenario {named}, not {scenario}")));
        }
    }
    let config_seed = params.take_reserved("seed").map(seed_from).transpose()?;
    let seed = req.seed.or(config_seed);
    let format = resolve_format(req);

    let report = scenarios::run_scenario(scenario, &mut params, seed)?;
    let parameters = params.finish()?;
    let seed = seed.filter(|_| scenario.is_stochastic());

    let data = match format {
        Format::Csv => render_csv(&report.records)?,
        Format::Json => render_json(scenario.name(), &parameters, seed, &report),
    };

    let mut files = Vec::new();
    if let Some(out) = &req.out {
        write_file(out, &data)?;
        files.push(out.clone());
        if format == Format::Csv && !report.summary.is_empty() {
            let path = sibling(out, "summary");
            write_file(&path, &render_summary(scenario.name(), &report))?;
            files.push(path);
        }
        let manifest = render_manifest(&ManifestInfo {
            scenario: scenario.name(),
            parameters: &parameters,
            seed,
            format,
            config_file: req.config.as_deref(),
            data_files: files.clone(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            workers: rayon::current_num_threads(),
        });
        let path = sibling(out, "manifest");
        write_file(&path, &manifest)?;
        files.push(path);
    }
    Ok(RunOutcome {
        scenario,
        format,
        data,
        files,
        notes: report.notes,
    })
}
