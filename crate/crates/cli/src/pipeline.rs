use std::path::Path;

use qds_core::bounds::{lemma41_constants, verify_relative_bound, Lemma41Constants, RelativeBoundCertificate};
use qds_core::criteria::{
    check_assumption_c, check_cf, check_phi_domination, check_resolvent_bound, fit_constants, verdict, ConstantFit,
    CriterionCertificate, ResolventBoundCheck, Verdict, VerdictReport,
};
use qds_core::models::{BuiltModel, ModelSpec};
use qds_core::semigroup::{leakage_report, LeakageReport, ResolventEngine};
use qds_core::{CVec, GridBasis, LindbladModel, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BoundSpec, LoadedConfig, Pipeline, WSpec};
use crate::CliError;

/// Contents of `certificate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "snake_case")]
pub enum Artifact {
    Check(CheckArtifact),
    Simulate(SimulateArtifact),
    Bound(BoundArtifact),
    Fit(FitArtifact),
    Verdict(VerdictArtifact),
}

impl Artifact {
    /// One-word outcome for the manifest and the console.
    pub fn outcome(&self) -> String {
        match self {
            Artifact::Check(a) => verdict_word(a.verdict),
            Artifact::Fit(a) => verdict_word(a.verdict),
            Artifact::Bound(a) => verdict_word(a.certificate.verdict),
            Artifact::Verdict(a) => a.report.verdict.to_string(),
            Artifact::Simulate(a) => format!(
                "extrapolated deficiency {:.6e}",
                a.report.extrapolated_deficiency.value
            ),
        }
    }
}

fn verdict_word(v: Verdict) -> String {
    if v.passed() { "pass" } else { "fail" }.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsedConstants {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub fitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundCell {
    pub u_label: String,
    pub x: f64,
    pub eps: f64,
    pub lambda: f64,
    pub check: ResolventBoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub constants: UsedConstants,
    pub certificates: Vec<CriterionCertificate>,
    pub resolvent_bounds: Vec<ResolventBoundCell>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckArtifact {
    pub model: ModelSpec,
    pub lambda: f64,
    pub rows: Vec<CheckRow>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub model: ModelSpec,
    pub fits: Vec<ConstantFit>,
    /// Largest relative change of `a`, `b` or `p` between consecutive sizes.
    pub max_relative_change: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArtifact {
    pub model: ModelSpec,
    pub report: LeakageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictArtifact {
    pub model: ModelSpec,
    pub report: VerdictReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundArtifact {
    pub bound: BoundSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Lemma41Constants>,
    pub certificate: RelativeBoundCertificate,
}

/// Header and rows of `trace.csv`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub(crate) fn core_error(cfg: &LoadedConfig, e: qds_core::Error) -> CliError {
    match e {
        qds_core::Error::Numeric(_) | qds_core::Error::Conditioning(_) => CliError::Numeric(e.to_string()),
        other => cfg.error("model", format!("rejected by the model library: {other}")),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn build(cfg: &LoadedConfig, spec: &ModelSpec, n: usize) -> Result<BuiltModel, CliError> {
    spec.with_size(n).build().map_err(|e| core_error(cfg, e))
}

fn certificate_operator(cfg: &LoadedConfig, built: BuiltModel) -> Result<(LindbladModel, qds_core::CMat), CliError> {
    match built.c {
        Some(c) => Ok((built.model, c)),
        None => Err(cfg.error(
            "model",
            "this model family has no certificate operator C; use the simulate or verdict pipeline",
        )),
    }
}

fn q_trace_rows(n: usize, values: &[f64], partial: &[f64], rows: &mut Vec<Vec<String>>) {
    for (k, (q, s)) in values.iter().zip(partial).enumerate() {
        rows.push(vec![n.to_string(), k.to_string(), num(*q), num(*s)]);
    }
}

const Q_HEADER: [&str; 4] = ["N", "k", "q_k", "weighted_partial_sum"];

pub fn run_pipeline(cfg: &LoadedConfig, pipeline: Pipeline) -> Result<(Artifact, Table), CliError> {
    match pipeline {
        Pipeline::Check => run_check(cfg),
        Pipeline::Fit => run_fit(cfg),
        Pipeline::Simulate => run_simulate(cfg),
        Pipeline::Verdict => run_verdict(cfg),
        Pipeline::Bound => run_bound(cfg),
    }
}

/// Random unit vector supported on the first `interior` basis states.
fn seeded_state(seed: u64, dim: usize, interior: usize) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = CVec::zeros(dim);
    for z in u.iter_mut().take(interior) {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let norm = u.norm();
    u.unscale(norm)
}

fn run_check(cfg: &LoadedConfig) -> Result<(Artifact, Table), CliError> {
    let c = &cfg.config;
    let spec = cfg.model()?;
    let rows: Vec<Result<(CheckRow, Vec<Vec<String>>), CliError>> = cfg
        .ladder()
        .par_iter()
        .map(|&n| {
            let (model, cop) = certificate_operator(cfg, build(cfg, spec, n)?)?;
            let err = |e| core_error(cfg, e);
            let buffer = model.basis().buffer();
            let constants = match c.constants {
                Some(k) => UsedConstants {
                    a: k.a,
                    b: k.b,
                    p: k.p,
                    fitted: false,
                },
                None => {
                    let fit = fit_constants(&model, &cop, &c.eps_grid, &c.p_candidates, buffer, None).map_err(err)?;
                    UsedConstants {
                        a: fit.a,
                        b: fit.b,
                        p: fit.p,
                        fitted: true,
                    }
                }
            };
            let certificates = vec![
                check_cf(&model, &cop, constants.b, buffer, None).map_err(err)?,
                check_assumption_c(&model, &cop, constants.a, constants.b, constants.p, &c.eps_grid, buffer, None)
                    .map_err(err)?,
                check_phi_domination(&model, &cop, c.delta, None).map_err(err)?,
            ];
            let dim = model.dim();
            let mut states = vec![(c.u_selector.label(), c.u_selector.resolve(dim).map_err(err)?)];
            for &s in &c.seeds {
                states.push((format!("seed:{s}"), seeded_state(s, dim, model.basis().interior_dim())));
            }
            // the bound needs λ > max(b, 1)
            let floor = constants.b.max(1.0);
            let lambda = if c.lambda > floor { c.lambda } else { floor + 1.0 };
            let mut cells = Vec::new();
            for (label, u) in &states {
                for &eps in &c.eps_grid {
                    for &x in c.x_weights.iter().filter(|x| **x < 1.0) {
                        cells.push((label.clone(), u, eps, x));
                    }
                }
            }
            let resolvent_bounds = cells
                .into_par_iter()
                .map(|(u_label, u, eps, x)| {
                    let check = check_resolvent_bound(
                        &model,
                        &cop,
                        constants.a,
                        constants.b,
                        constants.p,
                        u,
                        lambda,
                        x,
                        eps,
                        None,
                    )
                    .map_err(err)?;
                    Ok(ResolventBoundCell {
                        u_label,
                        x,
                        eps,
                        lambda,
                        check,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let engine = ResolventEngine::new(&model).map_err(err)?;
            let trace = engine
                .q_power_trace(c.lambda, &states[0].1, 1.0, c.k_max, &states[0].0)
                .map_err(err)?;
            let mut table = Vec::new();
            q_trace_rows(n, &trace.values, &trace.weighted_partial_sums, &mut table);
            let passed = certificates.iter().all(CriterionCertificate::passed)
                && resolvent_bounds.iter().all(|r| r.check.passed);
            Ok((
                CheckRow {
                    n,
                    constants,
                    certificates,
                    resolvent_bounds,
                    passed,
                },
                table,
            ))
        })
        .collect();
    let mut out_rows = Vec::new();
    let mut table = Vec::new();
    for r in rows {
        let (row, t) = r?;
        out_rows.push(row);
        table.extend(t);
    }
    let ok = out_rows.iter().all(|r| r.passed);
    Ok((
        Artifact::Check(CheckArtifact {
            model: spec.clone(),
            lambda: c.lambda,
            rows: out_rows,
            verdict: Verdict::from_bool(ok),
        }),
        Table {
            header: Q_HEADER.to_vec(),
            rows: table,
        },
    ))
}

fn relative_change(x0: f64, x1: f64) -> f64 {
    let scale = x0.abs().max(x1.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x1 - x0).abs() / scale
    }
}

fn run_fit(cfg: &LoadedConfig) -> Result<(Artifact, Table), CliError> {
    let c = &cfg.config;
    let spec = cfg.model()?;
    let fits = cfg
        .ladder()
        .par_iter()
        .map(|&n| {
            let (model, cop) = certificate_operator(cfg, build(cfg, spec, n)?)?;
            let buffer = model.basis().buffer();
            let fit = fit_constants(&model, &cop, &c.eps_grid, &c.p_candidates, buffer, None)
                .map_err(|e| core_error(cfg, e))?;
            let engine = ResolventEngine::new(&model).map_err(|e| core_error(cfg, e))?;
            let u = c.u_selector.resolve(model.dim()).map_err(|e| core_error(cfg, e))?;
            let trace = engine
                .q_power_trace(c.lambda, &u, 1.0, c.k_max, &c.u_selector.label())
                .map_err(|e| core_error(cfg, e))?;
            let mut rows = Vec::new();
            q_trace_rows(n, &trace.values, &trace.weighted_partial_sums, &mut rows);
            Ok((fit, rows))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let max_relative_change = fits
        .windows(2)
        .map(|w| {
            let (f0, f1) = (&w[0].0, &w[1].0);
            relative_change(f0.a, f1.a)
                .max(relative_change(f0.b, f1.b))
                .max(relative_change(f0.p, f1.p))
        })
        .fold(0.0, f64::max);
    let mut table = Vec::new();
    let mut out = Vec::new();
    for (fit, rows) in fits {
        out.push(fit);
        table.extend(rows);
    }
    let ok = out.iter().all(|f| f.feasible);
    Ok((
        Artifact::Fit(FitArtifact {
            model: spec.clone(),
            fits: out,
            max_relative_change,
            verdict: Verdict::from_bool(ok),
        }),
        Table {
            header: Q_HEADER.to_vec(),
            rows: table,
        },
    ))
}

fn ladder_models(cfg: &LoadedConfig, spec: &ModelSpec) -> Result<Vec<LindbladModel>, CliError> {
    cfg.ladder()
        .par_iter()
        .map(|&n| build(cfg, spec, n).map(|b| b.model))
        .collect()
}

fn run_simulate(cfg: &LoadedConfig) -> Result<(Artifact, Table), CliError> {
    let c = &cfg.config;
    let spec = cfg.model()?;
    let models = ladder_models(cfg, spec)?;
    let report = leakage_report(&models, &c.u_selector, &c.t_grid, c.lambda).map_err(|e| core_error(cfg, e))?;
    let mut rows = Vec::new();
    for (n, curve) in report.n_ladder.iter().zip(&report.leakage) {
        for (t, l) in report.t_grid.iter().zip(curve) {
            rows.push(vec![n.to_string(), num(*t), num(*l)]);
        }
    }
    Ok((
        Artifact::Simulate(SimulateArtifact {
            model: spec.clone(),
            report,
        }),
        Table {
            header: vec!["N", "t", "leakage"],
            rows,
        },
    ))
}

fn run_verdict(cfg: &LoadedConfig) -> Result<(Artifact, Table), CliError> {
    let c = &cfg.config;
    let spec = cfg.model()?;
    let models = ladder_models(cfg, spec)?;
    let report = verdict(&models, c.lambda, &c.u_selector, c.theta).map_err(|e| core_error(cfg, e))?;
    let mut rows = Vec::new();
    for (n, trace) in report.n_ladder.iter().zip(&report.traces) {
        q_trace_rows(*n, &trace.values, &trace.weighted_partial_sums, &mut rows);
    }
    Ok((
        Artifact::Verdict(VerdictArtifact {
            model: spec.clone(),
            report,
        }),
        Table {
            header: Q_HEADER.to_vec(),
            rows,
        },
    ))
}

fn read_samples(cfg: &LoadedConfig, path: &Path) -> Result<Vec<f64>, CliError> {
    let resolved = cfg.resolve(path);
    let text = std::fs::read_to_string(&resolved)
        .map_err(|e| cfg.error("path", format!("cannot read {}: {e}", resolved.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| cfg.error("path", format!("{} is not a JSON array of numbers: {e}", resolved.display())))
}

pub fn sample_w(cfg: &LoadedConfig, w: &WSpec, grid: &GridBasis) -> Result<Vec<f64>, CliError> {
    let r2: Vec<f64> = grid.nodes().iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
    let values = match w {
        WSpec::Lorentzian { scale } => r2.iter().map(|r| scale / (1.0 + r)).collect(),
        WSpec::Power { exponent, scale } => r2.iter().map(|r| scale * (1.0 + r).powf(-exponent)).collect(),
        WSpec::Samples { values } => values.clone(),
        WSpec::File { path } => read_samples(cfg, path)?,
    };
    if values.len() != grid.len() {
        return Err(cfg.error("w", format!("{} samples of W for a grid of {} nodes", values.len(), grid.len())));
    }
    Ok(values)
}

fn run_bound(cfg: &LoadedConfig) -> Result<(Artifact, Table), CliError> {
    let c = &cfg.config;
    let spec = c.bound.clone().unwrap_or_default();
    let err = |e| core_error(cfg, e);
    let grid = GridBasis::new(spec.points, spec.half_length, spec.n).map_err(|e| cfg.error("bound", e.to_string()))?;
    let w = sample_w(cfg, &spec.w, &grid)?;
    let (constants, a, p) = match c.constants {
        Some(k) => (None, k.a, k.p),
        None => {
            let k = lemma41_constants(&w, spec.n, spec.alpha, &grid).map_err(|e| match e {
                qds_core::Error::Hypothesis(_) => cfg.error("bound", e.to_string()),
                other => err(other),
            })?;
            (Some(k), k.a, k.p)
        }
    };
    let mut certificate = verify_relative_bound(&w, &grid, &c.eps_grid, a, p, None).map_err(err)?;
    if let Some(k) = &constants {
        certificate = certificate.with_constants(k);
    }
    let rows = certificate
        .eps_grid
        .iter()
        .enumerate()
        .map(|(i, eps)| {
            let radius = certificate.radii.as_ref().map_or(String::new(), |r| num(r[i]));
            vec![num(*eps), num(certificate.margins[i]), radius]
        })
        .collect();
    Ok((
        Artifact::Bound(BoundArtifact {
            bound: spec,
            constants,
            certificate,
        }),
        Table {
            header: vec!["eps", "margin", "radius"],
            rows,
        },
    ))
}
