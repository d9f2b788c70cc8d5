//! Experiment runner: config in, `certificate.json`, `trace.csv` and
//! `manifest.json` out.
//!
//! Exit codes: 0 for any computed result (a failed certificate included),
//! 2 for invalid configs or missing artifacts, 3 for numerical breakdown.

pub mod config;
pub mod pipeline;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, LoadedConfig, Pipeline};
pub use pipeline::Artifact;
pub use report::report_summary;

pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}:{line}: {msg}", path.display())]
    Config { path: PathBuf, line: usize, msg: String },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("computation failed: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::MissingArtifact(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn io_err(what: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", what.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub pipeline: Pipeline,
    pub config_path: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub started_at: String,
    pub wall_clock_seconds: f64,
    pub outcome: String,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifact: Artifact,
    pub manifest: Manifest,
}

/// Load `config_path`, run `pipeline` and write the three artifacts.
/// `out` overrides `output.dir` from the config.
pub fn run(pipeline: Pipeline, config_path: &Path, out: Option<&Path>, jobs: Option<usize>) -> Result<RunOutcome, CliError> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let cfg = config::load(config_path, pipeline)?;
    let out_dir = match (out, &cfg.config.output.dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => cfg.resolve(d),
        (None, None) => return Err(cfg.error("output", "no output directory: pass --out or set `output.dir`")),
    };
    let compute = || pipeline::run_pipeline(&cfg, pipeline);
    let (artifact, table) = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Io(format!("worker pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
    let cert_path = out_dir.join(CERTIFICATE_FILE);
    let json = serde_json::to_string_pretty(&artifact).map_err(|e| io_err(&cert_path, e))?;
    std::fs::write(&cert_path, json + "\n").map_err(|e| io_err(&cert_path, e))?;
    write_table(&out_dir.join(TRACE_FILE), &table)?;
    let manifest = Manifest {
        tool: "qds".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        pipeline,
        config_path: config_path.display().to_string(),
        config_sha256: sha256_hex(cfg.text.as_bytes()),
        seeds: cfg.config.seeds.clone(),
        jobs,
        started_at,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outcome: artifact.outcome(),
        outputs: vec![CERTIFICATE_FILE.into(), TRACE_FILE.into()],
    };
    let man_path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&man_path, e))?;
    std::fs::write(&man_path, json + "\n").map_err(|e| io_err(&man_path, e))?;
    Ok(RunOutcome {
        out_dir,
        artifact,
        manifest,
    })
}

fn write_table(path: &Path, table: &pipeline::Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&table.header).map_err(|e| io_err(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
