//! Conservativity certificates from operator inequalities on the interior
//! of a truncation, constant fitting, the weighted resolvent bound and the
//! ladder verdict.
//!
//! Every certificate margin is the largest eigenvalue of a Hermitian
//! defect matrix: negative means the inequality holds with room to spare,
//! and the certificate passes when all margins are `≤ slack`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{LindbladModel, Mode};
use crate::linops::{
    hermitian_part, identity, is_hermitian, leading_block, max_eig, min_eig, op_norm, regularize, CMat, CVec,
};
use crate::semigroup::{DiagnosticTrace, ResolventEngine, SeriesOptions, StateSelector};

/// Note attached to certificates for hypotheses with no finite-dimensional content.
pub const DOMAIN_HYPOTHESES_NOTE: &str =
    "domain and core conditions hold by construction in finite dimension; the analytic hypotheses are not checked";

pub const EPS_GRID_NOTE: &str = "inequalities checked on the listed finite eps grid only, not on all of (0,1)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    CF,
    AssumptionC,
    PhiDomination,
    ResolventBound,
    RelativeBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionCertificate {
    pub kind: CertificateKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub buffer: usize,
    pub constants: Constants,
    pub eps_grid: Vec<f64>,
    pub margins: Vec<Margin>,
    pub slack: f64,
    pub verdict: Verdict,
    pub model_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CriterionCertificate {
    fn build(
        kind: CertificateKind,
        model: &LindbladModel,
        buffer: usize,
        constants: Constants,
        eps_grid: Vec<f64>,
        margins: Vec<Margin>,
        slack: f64,
        notes: Vec<String>,
    ) -> Self {
        let ok = margins.iter().all(|m| m.margin <= slack);
        Self {
            kind,
            n: model.dim(),
            buffer,
            constants,
            eps_grid,
            margins,
            slack,
            verdict: Verdict::from_bool(ok),
            model_hash: model.fingerprint(),
            notes,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Default slack `1e−8·(1 + ‖C‖²)`.
pub fn default_slack(c: &CMat) -> f64 {
    1e-8 * (1.0 + op_norm(c).powi(2))
}

fn require_psd(c: &CMat, dim: usize) -> Result<()> {
    if c.shape() != (dim, dim) {
        return Err(Error::input(format!("C has shape {:?}, model dim is {dim}", c.shape())));
    }
    if !is_hermitian(c) {
        return Err(Error::input("C must be Hermitian"));
    }
    let low = min_eig(c)?;
    if low < -1e-12 * (1.0 + op_norm(c)) {
        return Err(Error::input(format!("C must be positive semidefinite, min eigenvalue {low:.3e}")));
    }
    Ok(())
}

fn interior(model: &LindbladModel, buffer: usize) -> Result<usize> {
    if buffer >= model.dim() {
        return Err(Error::input(format!(
            "buffer {buffer} leaves no interior in dimension {}",
            model.dim()
        )));
    }
    Ok(model.dim() - buffer)
}

fn top(a: &CMat, k: usize) -> Result<f64> {
    max_eig(&hermitian_part(&leading_block(a, k)))
}

/// Interior compressions shared by the Assumption C defects.
struct DefectParts {
    /// `Π(CG + G†C)Π`
    drift: CMat,
    /// `Π(Σ L†CL)Π`
    gain: CMat,
    /// `ΠC²Π`
    c2: CMat,
    /// `ΠCΠ`
    c1: CMat,
}

impl DefectParts {
    fn new(model: &LindbladModel, c: &CMat, k: usize) -> Self {
        let g = model.g();
        let block = |a: &CMat| hermitian_part(&leading_block(a, k));
        Self {
            drift: block(&(c * g + g.adjoint() * c)),
            gain: block(&model.gain(c)),
            c2: block(&(c * c)),
            c1: block(c),
        }
    }

    /// `CG + G†C + (1−ε)C² − bC` on the interior.
    fn d1(&self, eps: f64, b: f64) -> CMat {
        &self.drift + self.c2.scale(1.0 - eps) - self.c1.scale(b)
    }

    /// `CG + G†C + ΣL†CL − εC² − bC` on the interior.
    fn d2(&self, eps: f64, b: f64) -> CMat {
        &self.drift + &self.gain - self.c2.scale(eps) - self.c1.scale(b)
    }

    fn tops(&self, eps: f64, b: f64) -> Result<(f64, f64)> {
        Ok((max_eig(&self.d1(eps, b))?, max_eig(&self.d2(eps, b))?))
    }
}

/// Chebotarev–Fagnola condition: `Π(CG + G†C + ΣL†CL − bC)Π ⪯ τ` together
/// with `M ⪯ C` on the interior.
pub fn check_cf(model: &LindbladModel, c: &CMat, b: f64, buffer: usize, slack: Option<f64>) -> Result<CriterionCertificate> {
    require_psd(c, model.dim())?;
    let k = interior(model, buffer)?;
    let g = model.g();
    let d = c * g + g.adjoint() * c + model.gain(c) - c.scale(b);
    let margins = vec![
        Margin {
            condition: "cf_defect".into(),
            eps: None,
            margin: top(&d, k)?,
        },
        Margin {
            condition: "loss_below_c".into(),
            eps: None,
            margin: top(&(model.m() - c), k)?,
        },
    ];
    Ok(CriterionCertificate::build(
        CertificateKind::CF,
        model,
        buffer,
        Constants {
            b: Some(b),
            ..Constants::default()
        },
        Vec::new(),
        margins,
        slack.unwrap_or_else(|| default_slack(c)),
        vec![DOMAIN_HYPOTHESES_NOTE.into()],
    ))
}

fn validate_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::input("eps grid must be non-empty"));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::input(format!("eps values must lie in (0, 1), got {e}")));
    }
    Ok(())
}

fn validate_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::input(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// The two defects per ε:
/// `D₁ = CG + G†C + (1−ε)C² − bC − aε^{−p}`,
/// `D₂ = CG + G†C + ΣL†CL − εC² − bC − aε^{−p}`.
#[allow(clippy::too_many_arguments)]
pub fn check_assumption_c(
    model: &LindbladModel,
    c: &CMat,
    a: f64,
    b: f64,
    p: f64,
    eps_grid: &[f64],
    buffer: usize,
    slack: Option<f64>,
) -> Result<CriterionCertificate> {
    validate_p(p)?;
    validate_eps_grid(eps_grid)?;
    if a < 0.0 || b < 0.0 {
        return Err(Error::input("constants a and b must be non-negative"));
    }
    require_psd(c, model.dim())?;
    let k = interior(model, buffer)?;
    let parts = DefectParts::new(model, c, k);
    let mut margins = Vec::with_capacity(2 * eps_grid.len());
    for &eps in eps_grid {
        let (t1, t2) = parts.tops(eps, b)?;
        let shift = a * eps.powf(-p);
        margins.push(Margin {
            condition: "D1".into(),
            eps: Some(eps),
            margin: t1 - shift,
        });
        margins.push(Margin {
            condition: "D2".into(),
            eps: Some(eps),
            margin: t2 - shift,
        });
    }
    Ok(CriterionCertificate::build(
        CertificateKind::AssumptionC,
        model,
        buffer,
        Constants {
            a: Some(a),
            b: Some(b),
            p: Some(p),
            delta: None,
        },
        eps_grid.to_vec(),
        margins,
        slack.unwrap_or_else(|| default_slack(c)),
        vec![DOMAIN_HYPOTHESES_NOTE.into(), EPS_GRID_NOTE.into()],
    ))
}

/// `δM ⪯ C` on the model's interior. The stored margin is
/// `max_eig(δM − C) = −min_eig(C − δM)`.
pub fn check_phi_domination(model: &LindbladModel, c: &CMat, delta: f64, slack: Option<f64>) -> Result<CriterionCertificate> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::input(format!("delta must be > 0, got {delta}")));
    }
    require_psd(c, model.dim())?;
    let buffer = model.basis().buffer();
    let k = interior(model, buffer)?;
    let margin = top(&(model.m().scale(delta) - c), k)?;
    Ok(CriterionCertificate::build(
        CertificateKind::PhiDomination,
        model,
        buffer,
        Constants {
            delta: Some(delta),
            ..Constants::default()
        },
        Vec::new(),
        vec![Margin {
            condition: "phi_domination".into(),
            eps: None,
            margin,
        }],
        slack.unwrap_or_else(|| default_slack(c)),
        vec![DOMAIN_HYPOTHESES_NOTE.into()],
    ))
}

/// `{0} ∪ {2^{k/4} : k = −40..=60}`.
pub fn b_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-40..=60).map(|k| 2f64.powf(k as f64 / 4.0)))
        .collect()
}

pub fn default_eps_grid() -> Vec<f64> {
    (1..=8).map(|k| 0.5f64.powi(k)).collect()
}

pub fn default_p_candidates() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub feasible: bool,
    pub certificate: CriterionCertificate,
}

/// Search `(a, b, p)` for the Assumption C defects. For each `p` and each
/// `b` on [`b_grid`], `a = max_ε ε^p·max(0, λ_max)` with `λ_max` the larger
/// top eigenvalue of the two defects without their `aε^{−p}` term. The
/// returned triple minimises `a`, then `b`, then `p`.
pub fn fit_constants(
    model: &LindbladModel,
    c: &CMat,
    eps_grid: &[f64],
    p_candidates: &[f64],
    buffer: usize,
    slack: Option<f64>,
) -> Result<ConstantFit> {
    validate_eps_grid(eps_grid)?;
    if p_candidates.is_empty() {
        return Err(Error::input("p candidate list must be non-empty"));
    }
    for &p in p_candidates {
        validate_p(p)?;
    }
    require_psd(c, model.dim())?;
    let k = interior(model, buffer)?;
    let parts = DefectParts::new(model, c, k);
    let bs = b_grid();
    let tops: Vec<Result<Vec<f64>>> = bs
        .par_iter()
        .map(|&b| {
            eps_grid
                .iter()
                .map(|&eps| parts.tops(eps, b).map(|(t1, t2)| t1.max(t2).max(0.0)))
                .collect()
        })
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for (b, row) in bs.iter().zip(tops) {
        let row = row?;
        for &p in p_candidates {
            let a = eps_grid
                .iter()
                .zip(&row)
                .map(|(eps, t)| eps.powf(p) * t)
                .fold(0.0, f64::max);
            let better = match best {
                None => true,
                Some((ba, bb, bp)) => {
                    let tol = 1e-9 * (1.0 + ba.min(a));
                    if (a - ba).abs() > tol {
                        a < ba
                    } else if *b != bb {
                        *b < bb
                    } else {
                        p < bp
                    }
                }
            };
            if better {
                best = Some((a, *b, p));
            }
        }
    }
    let (a, b, p) = best.expect("grids are non-empty");
    let certificate = check_assumption_c(model, c, a, b, p, eps_grid, buffer, slack)?;
    Ok(ConstantFit {
        a,
        b,
        p,
        feasible: certificate.passed(),
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundCheck {
    /// `(λ − b)⟨u, R_{λ,x}(C_ε) u⟩`
    pub lhs: f64,
    /// `⟨u, Cu⟩ + 2a(1−x)^{−p}‖u‖²`
    pub rhs: f64,
    /// `rhs − lhs`; the bound holds when `margin ≥ −slack`.
    pub margin: f64,
    pub slack: f64,
    pub passed: bool,
    pub series_terms: usize,
    pub series_tail: f64,
}

/// Evaluate the weighted resolvent bound for one `(u, λ, x, ε)`.
#[allow(clippy::too_many_arguments)]
pub fn check_resolvent_bound(
    model: &LindbladModel,
    c: &CMat,
    a: f64,
    b: f64,
    p: f64,
    u: &CVec,
    lambda: f64,
    x: f64,
    eps: f64,
    slack: Option<f64>,
) -> Result<ResolventBoundCheck> {
    if !(lambda > b.max(1.0)) {
        return Err(Error::input(format!("lambda must exceed max(b, 1) = {}, got {lambda}", b.max(1.0))));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::input(format!("x must lie in (0, 1), got {x}")));
    }
    validate_p(p)?;
    if !(eps >= 0.0) {
        return Err(Error::input(format!("eps must be >= 0, got {eps}")));
    }
    require_psd(c, model.dim())?;
    if u.len() != model.dim() {
        return Err(Error::input("state length does not match model"));
    }
    let k = model.basis().interior_dim();
    if u.iter().skip(k).any(|z| z.norm() > 0.0) {
        return Err(Error::input("state must lie in the interior subspace"));
    }
    let unorm = u.norm_squared();
    let rhs = u.dotc(&(c * u)).re + 2.0 * a * (1.0 - x).powf(-p) * unorm;
    if unorm == 0.0 {
        return Ok(ResolventBoundCheck {
            lhs: 0.0,
            rhs,
            margin: rhs,
            slack: slack.unwrap_or(1e-6),
            passed: rhs >= -slack.unwrap_or(1e-6),
            series_terms: 0,
            series_tail: 0.0,
        });
    }
    let c_eps = regularize(c, eps)?;
    let engine = ResolventEngine::new(model)?;
    let series = engine.resolvent_series(lambda, &c_eps, x, u, &SeriesOptions::default())?;
    let lhs = (lambda - b) * series.value;
    let slack = slack.unwrap_or(1e-6);
    let margin = rhs - lhs;
    Ok(ResolventBoundCheck {
        lhs,
        rhs,
        margin,
        slack,
        passed: margin >= -slack,
        series_terms: series.terms,
        series_tail: series.tail_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMethod {
    Geometric,
    LastValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub uncertainty: f64,
    /// Fitted per-unit ratio `r` of `d_N = d_∞ + c rᴺ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub method: ExtrapolationMethod,
}

/// Fit `d_N = d_∞ + c rᴺ` through the last three ladder points. Falls back
/// to the last value when the differences are not geometric-like.
pub fn geometric_extrapolation(ns: &[usize], ds: &[f64]) -> Result<Extrapolation> {
    if ns.len() != ds.len() || ns.is_empty() {
        return Err(Error::input("ladder and values must be non-empty and equally long"));
    }
    let last = *ds.last().unwrap();
    let fallback = |unc: f64| Extrapolation {
        value: last,
        uncertainty: unc,
        ratio: None,
        method: ExtrapolationMethod::LastValue,
    };
    if ds.len() < 3 {
        let unc = if ds.len() == 2 { (ds[1] - ds[0]).abs() } else { 0.0 };
        return Ok(fallback(unc));
    }
    let n = ns.len();
    let (n0, n1, n2) = (ns[n - 3] as f64, ns[n - 2] as f64, ns[n - 1] as f64);
    let (d0, d1, d2) = (ds[n - 3], ds[n - 2], ds[n - 1]);
    let (s1, s2) = (d1 - d0, d2 - d1);
    let negligible = 1e-14 * (1.0 + d2.abs());
    if s1.abs() <= negligible && s2.abs() <= negligible {
        return Ok(fallback(s2.abs()));
    }
    if s1 * s2 <= 0.0 || !(n1 > n0 && n2 > n1) {
        return Ok(fallback(s1.abs().max(s2.abs())));
    }
    let rho = s2 / s1;
    let (ga, gb) = (n1 - n0, n2 - n1);
    // f(r) = (r^{n2} − r^{n1}) / (r^{n1} − r^{n0}) = r^{ga}(1 − r^{gb}) / (1 − r^{ga})
    let f = |r: f64| r.powf(ga) * (1.0 - r.powf(gb)) / (1.0 - r.powf(ga));
    let limit = gb / ga;
    if rho >= limit {
        return Ok(fallback(s1.abs() + s2.abs()));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || mid >= 1.0 {
            break;
        }
        if f(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let denom = r.powf(n1) - r.powf(n0);
    if denom == 0.0 || !denom.is_finite() {
        return Ok(fallback(s1.abs() + s2.abs()));
    }
    let cc = s1 / denom;
    let value = d2 - cc * r.powf(n2);
    let residual = [(n0, d0), (n1, d1), (n2, d2)]
        .iter()
        .map(|(nn, dd)| (dd - value - cc * r.powf(*nn)).abs())
        .fold(0.0, f64::max);
    Ok(Extrapolation {
        value,
        uncertainty: residual + (d2 - value).abs(),
        ratio: Some(r),
        method: ExtrapolationMethod::Geometric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictLabel {
    #[serde(rename = "conservative-consistent")]
    ConservativeConsistent,
    #[serde(rename = "non-conservative-consistent")]
    NonConservativeConsistent,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictLabel::ConservativeConsistent => "conservative-consistent",
            VerdictLabel::NonConservativeConsistent => "non-conservative-consistent",
            VerdictLabel::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    #[serde(rename = "N_ladder")]
    pub n_ladder: Vec<usize>,
    pub lambda: f64,
    pub u_label: String,
    pub theta: f64,
    /// `1 − λ⟨u, R_λ(I) u⟩` per ladder size.
    pub deficiency: Vec<f64>,
    /// `Σ_k ⟨u, Q_λᵏ(I) u⟩/(k+1)` per ladder size.
    pub weighted_series: Vec<f64>,
    pub series_converged: Vec<bool>,
    pub traces_monotone: bool,
    pub ladder_monotone: bool,
    pub extrapolated_deficiency: Extrapolation,
    pub extrapolated_weighted_series: Extrapolation,
    pub verdict: VerdictLabel,
    #[serde(skip)]
    pub traces: Vec<DiagnosticTrace>,
}

fn monotone(values: &[f64]) -> bool {
    let tol = 1e-12;
    values.windows(2).all(|w| w[1] >= w[0] - tol) || values.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Deficiency and weighted series along an ascending ladder of absorbing
/// truncations, extrapolated to a `*-consistent` label.
pub fn verdict(models: &[LindbladModel], lambda: f64, u: &StateSelector, theta: f64) -> Result<VerdictReport> {
    if models.len() < 3 {
        return Err(Error::input(format!("verdict needs at least three ladder sizes, got {}", models.len())));
    }
    if !(lambda > 0.0) || !(theta > 0.0) {
        return Err(Error::input("lambda and theta must be positive"));
    }
    let n_ladder: Vec<usize> = models.iter().map(LindbladModel::dim).collect();
    if n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("ladder must be strictly ascending"));
    }
    if models.iter().any(|m| m.mode() != Mode::Absorbing) {
        return Err(Error::contract("verdict expects absorbing truncations"));
    }
    let rows: Vec<Result<(f64, DiagnosticTrace, bool)>> = models
        .par_iter()
        .map(|model| {
            let state = u.resolve(model.dim())?;
            let engine = ResolventEngine::new(model)?;
            let trace = engine.q_power_trace(lambda, &state, 1.0, 512, &u.label())?;
            let series =
                engine.resolvent_series(lambda, &identity(model.dim()), 1.0, &state, &SeriesOptions::default())?;
            Ok((1.0 - lambda * series.value, trace, series.converged))
        })
        .collect();
    let mut deficiency = Vec::new();
    let mut traces = Vec::new();
    let mut converged = Vec::new();
    for row in rows {
        let (d, t, c) = row?;
        deficiency.push(d);
        traces.push(t);
        converged.push(c);
    }
    let weighted: Vec<f64> = traces.iter().map(DiagnosticTrace::weighted_series).collect();
    let extrapolated_deficiency = geometric_extrapolation(&n_ladder, &deficiency)?;
    let extrapolated_weighted_series = geometric_extrapolation(&n_ladder, &weighted)?;
    let ladder_monotone = monotone(&deficiency);
    let traces_monotone = traces.iter().all(|t| t.is_monotone(1e-10));
    let d_inf = extrapolated_deficiency.value;
    let label = if d_inf <= theta {
        VerdictLabel::ConservativeConsistent
    } else if d_inf >= 10.0 * theta && ladder_monotone {
        VerdictLabel::NonConservativeConsistent
    } else {
        VerdictLabel::Inconclusive
    };
    Ok(VerdictReport {
        n_ladder,
        lambda,
        u_label: u.label(),
        theta,
        deficiency,
        weighted_series: weighted,
        series_converged: converged,
        traces_monotone,
        ladder_monotone,
        extrapolated_deficiency,
        extrapolated_weighted_series,
        verdict: label,
        traces,
    })
}
