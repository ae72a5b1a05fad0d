//! Config parsing, scenario dispatch and result persistence for the `rgibbs` binary.

pub mod config;
pub mod output;

use config::{ConfigError, RunConfig};
use output::{OutputFile, RunManifest};
use rgibbs::experiments::{ExperimentError, ScenarioReport};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const ENV_THREADS: &str = "RGIBBS_THREADS";
pub const ENV_OUTPUT_DIR: &str = "RGIBBS_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("scenario failed: {0}")]
    Experiment(#[from] ExperimentError),
    #[error("environment variable {var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Settings that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn from_env() -> Result<Self, CliError> {
        let threads = match std::env::var(ENV_THREADS) {
            Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Env {
                var: ENV_THREADS,
                message: format!("expected a positive integer, found `{v}`"),
            })?),
            Err(_) => None,
        };
        let output_dir = std::env::var_os(ENV_OUTPUT_DIR).filter(|v| !v.is_empty()).map(PathBuf::from);
        Ok(Overrides { output_dir, threads })
    }

    /// Values from `self` win over `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides { output_dir: self.output_dir.or(fallback.output_dir), threads: self.threads.or(fallback.threads) }
    }
}

/// Read a config file, or the config snapshot stored in a run manifest.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            ConfigError::Parse { line: Some(e.line()), message: format!("not a run manifest: {e}") }
        })?;
        return Ok(config::parse_str(&manifest.config)?);
    }
    Ok(config::parse_config(path)?)
}

pub fn output_dir(cfg: &RunConfig, overrides: &Overrides) -> PathBuf {
    overrides.output_dir.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn thread_budget(cfg: &RunConfig, overrides: &Overrides) -> usize {
    overrides.threads.or(cfg.threads).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub struct RunSummary {
    pub report: ScenarioReport,
    pub manifest: RunManifest,
    pub dir: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        if self.report.passed() {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Run the scenario on a pool of `threads` workers and write its outputs into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path, threads: usize) -> Result<RunSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::ThreadPool(e.to_string()))?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let report = pool.install(|| cfg.scenario.run(cfg.seed))?;
    let wall = clock.elapsed().as_secs_f64();
    let finished = chrono::Utc::now();

    std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let id = cfg.scenario.id();
    let params = serde_json::to_value(&cfg.scenario).expect("parameters serialize");
    let csv = output::csv_bytes(&report.measurements).map_err(io_err("formatting CSV"))?;
    let jsonl = output::jsonl_bytes(&report, &params);
    let mut outputs: Vec<OutputFile> = Vec::new();
    for (name, bytes) in [(format!("{id}.csv"), csv), (format!("{id}.jsonl"), jsonl)] {
        outputs.push(output::write_output(dir, &name, &bytes).map_err(io_err(format!("writing {name}")))?);
    }
    let manifest = RunManifest {
        tool: "rgibbs".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        csv_schema_version: output::CSV_SCHEMA_VERSION,
        scenario: id.into(),
        master_seed: cfg.seed,
        threads,
        config: cfg.to_toml(),
        started: started.to_rfc3339(),
        finished: finished.to_rfc3339(),
        wall_clock_seconds: wall,
        passed: report.passed(),
        failed_checks: report.failed_checks().iter().map(|c| c.name.clone()).collect(),
        outputs,
    };
    let path = output::manifest_path(dir, id);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(format!("writing {}", path.display())))?;
    Ok(RunSummary { report, manifest, dir: dir.to_path_buf() })
}
