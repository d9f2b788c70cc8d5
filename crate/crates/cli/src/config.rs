use std::path::{Path, PathBuf};

use qds_core::models::ModelSpec;
use qds_core::StateSelector;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Check,
    Simulate,
    Bound,
    Fit,
    Verdict,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Check => "check",
            Pipeline::Simulate => "simulate",
            Pipeline::Bound => "bound",
            Pipeline::Fit => "fit",
            Pipeline::Verdict => "verdict",
        }
    }

    fn needs_model(self) -> bool {
        self != Pipeline::Bound
    }
}

/// Fixed `(a, b, p)`; when absent the check pipeline fits them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedConstants {
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    pub p: f64,
}

/// Samples of the singular weight `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WSpec {
    /// `scale / (1 + |x|²)`
    Lorentzian {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · (1 + |x|²)^(−exponent)`
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Explicit node values in grid order.
    Samples { values: Vec<f64> },
    /// JSON array of node values, relative paths resolved against the config.
    File { path: PathBuf },
}

impl Default for WSpec {
    fn default() -> Self {
        WSpec::Lorentzian { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default)]
    pub w: WSpec,
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            n: 1,
            alpha: 0.0,
            points: default_points(),
            half_length: default_half_length(),
            w: WSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Pipeline>,
    pub lambda: f64,
    #[serde(default = "default_x_weights")]
    pub x_weights: Vec<f64>,
    #[serde(default = "qds_core::criteria::default_eps_grid")]
    pub eps_grid: Vec<f64>,
    /// Truncation sizes; defaults to the model's own `N`.
    #[serde(rename = "N_ladder", default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_selector")]
    pub u_selector: StateSelector,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Each seed adds one random interior state to the resolvent-bound cells.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "qds_core::criteria::default_p_candidates")]
    pub p_candidates: Vec<f64>,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<FixedConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_points() -> usize {
    512
}

fn default_half_length() -> f64 {
    20.0
}

fn default_x_weights() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_selector() -> StateSelector {
    StateSelector::Index(0)
}

fn default_theta() -> f64 {
    1e-3
}

fn default_k_max() -> usize {
    200
}

/// A parsed config together with its source text, for line lookups.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub text: String,
}

impl LoadedConfig {
    /// First line mentioning `"key"`, 1-based; line 1 when absent.
    pub fn line_of(&self, key: &str) -> usize {
        line_of(&self.text, key)
    }

    pub fn error(&self, key: &str, msg: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: self.line_of(key),
            msg: msg.into(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.path.parent().unwrap_or(Path::new(".")).join(p)
    }

    /// Truncation sizes to run.
    pub fn ladder(&self) -> Vec<usize> {
        match (&self.config.n_ladder, &self.config.model) {
            (Some(l), _) => l.clone(),
            (None, Some(m)) => vec![m.size()],
            (None, None) => Vec::new(),
        }
    }

    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.config
            .model
            .as_ref()
            .ok_or_else(|| self.error("model", "missing field `model`"))
    }
}

fn line_of(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1)
}

pub fn load(path: &Path, pipeline: Pipeline) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        line: 1,
        msg: format!("cannot read config: {e}"),
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        let full = e.to_string();
        let msg = full.rfind(" at line ").map_or(full.as_str(), |i| &full[..i]).to_string();
        CliError::Config {
            path: path.to_path_buf(),
            line: e.line().max(1),
            msg,
        }
    })?;
    let loaded = LoadedConfig {
        config,
        path: path.to_path_buf(),
        text,
    };
    validate(&loaded, pipeline)?;
    Ok(loaded)
}

fn validate(l: &LoadedConfig, pipeline: Pipeline) -> Result<(), CliError> {
    let c = &l.config;
    if let Some(p) = c.pipeline {
        if p != pipeline {
            return Err(l.error(
                "pipeline",
                format!("field `pipeline` is \"{}\" but the `{}` command was invoked", p.name(), pipeline.name()),
            ));
        }
    }
    if !(c.lambda > 0.0 && c.lambda.is_finite()) {
        return Err(l.error("lambda", format!("field `lambda` must be finite and > 0, got {}", c.lambda)));
    }
    if c.x_weights.is_empty() || c.x_weights.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
        return Err(l.error("x_weights", "field `x_weights` must be non-empty with entries in (0, 1]"));
    }
    if c.eps_grid.is_empty() || c.eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(l.error("eps_grid", "field `eps_grid` must be non-empty with finite positive entries"));
    }
    if c.t_grid.is_empty() || c.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(l.error("t_grid", "field `t_grid` must be non-empty with finite entries >= 0"));
    }
    if let Some(ladder) = &c.n_ladder {
        if ladder.is_empty() {
            return Err(l.error("N_ladder", "field `N_ladder` must be non-empty"));
        }
        if ladder.iter().any(|n| *n < 2) || ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(l.error("N_ladder", "field `N_ladder` must be strictly ascending with entries >= 2"));
        }
    }
    if !(c.theta > 0.0 && c.theta.is_finite()) {
        return Err(l.error("theta", format!("field `theta` must be finite and > 0, got {}", c.theta)));
    }
    if c.p_candidates.is_empty() || c.p_candidates.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(l.error("p_candidates", "field `p_candidates` must be non-empty with entries in (0, 1)"));
    }
    if !(c.delta > 0.0 && c.delta.is_finite()) {
        return Err(l.error("delta", format!("field `delta` must be finite and > 0, got {}", c.delta)));
    }
    if c.k_max == 0 {
        return Err(l.error("k_max", "field `k_max` must be positive"));
    }
    if let Some(k) = &c.constants {
        if !(k.a >= 0.0 && k.b.is_finite() && k.p > 0.0 && k.p < 1.0) {
            return Err(l.error("constants", "field `constants` needs a >= 0, finite b and p in (0, 1)"));
        }
    }
    if pipeline.needs_model() && c.model.is_none() {
        return Err(l.error("model", "missing field `model`"));
    }
    if let Some(WSpec::File { path }) = c.bound.as_ref().map(|b| &b.w) {
        let resolved = l.resolve(path);
        if !resolved.is_file() {
            return Err(l.error("path", format!("referenced file {} does not exist", resolved.display())));
        }
    }
    Ok(())
}
