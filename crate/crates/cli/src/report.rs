use std::fmt::Write as _;
use std::path::Path;

use qds_core::criteria::{CertificateKind, Extrapolation};

use crate::pipeline::Artifact;
use crate::{CliError, Manifest, CERTIFICATE_FILE, MANIFEST_FILE};

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T, CliError> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path)
        .map_err(|_| CliError::MissingArtifact(format!("{} not found", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::MissingArtifact(format!("{} is unreadable: {e}", path.display())))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn trend(values: &[f64]) -> &'static str {
    if values.len() < 2 {
        "single point"
    } else if values.windows(2).all(|w| w[1] == w[0]) {
        "constant"
    } else if values.windows(2).all(|w| w[1] >= w[0]) {
        "non-decreasing"
    } else if values.windows(2).all(|w| w[1] <= w[0]) {
        "non-increasing"
    } else {
        "non-monotone"
    }
}

fn extrapolation_line(out: &mut String, what: &str, e: &Extrapolation) {
    let method = match e.method {
        qds_core::criteria::ExtrapolationMethod::Geometric => "geometric",
        qds_core::criteria::ExtrapolationMethod::LastValue => "last value",
    };
    let _ = writeln!(out, "extrapolated {what}: {:.6e} +/- {:.2e} ({method})", e.value, e.uncertainty);
}

/// Text summary of a run directory.
pub fn report_summary(dir: &Path) -> Result<String, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact(format!("{} is not a directory", dir.display())));
    }
    let artifact: Artifact = read_json(dir, CERTIFICATE_FILE)?;
    let manifest: Manifest = read_json(dir, MANIFEST_FILE)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "qds {} | pipeline {} | config {}",
        manifest.version,
        manifest.pipeline.name(),
        &manifest.config_sha256[..12.min(manifest.config_sha256.len())]
    );
    match &artifact {
        Artifact::Verdict(a) => {
            let r = &a.report;
            let _ = writeln!(out, "lambda = {}, u = {}, theta = {}", r.lambda, r.u_label, r.theta);
            let _ = writeln!(out, "{:>6}  {:>14}  {:>14}  {:>9}", "N", "deficiency", "weighted_sum", "converged");
            for i in 0..r.n_ladder.len() {
                let _ = writeln!(
                    out,
                    "{:>6}  {:>14.6e}  {:>14.6e}  {:>9}",
                    r.n_ladder[i], r.deficiency[i], r.weighted_series[i], r.series_converged[i]
                );
            }
            let _ = writeln!(out, "deficiency column: {}", trend(&r.deficiency));
            extrapolation_line(&mut out, "deficiency", &r.extrapolated_deficiency);
            let _ = writeln!(out, "traces monotone: {}", mark(r.traces_monotone));
            let _ = writeln!(out, "verdict: {}", r.verdict);
        }
        Artifact::Simulate(a) => {
            let r = &a.report;
            let last_t = r.t_grid.last().copied().unwrap_or(0.0);
            let _ = writeln!(out, "lambda = {}, u = {}", r.lambda, r.u_label);
            let _ = writeln!(out, "{:>6}  {:>14}  {:>14}", "N", "deficiency", format!("leak(t={last_t})"));
            for (i, n) in r.n_ladder.iter().enumerate() {
                let leak = r.leakage[i].last().copied().unwrap_or(f64::NAN);
                let _ = writeln!(out, "{n:>6}  {:>14.6e}  {leak:>14.6e}", r.deficiency[i]);
            }
            let _ = writeln!(out, "deficiency column: {}", trend(&r.deficiency));
            extrapolation_line(&mut out, "deficiency", &r.extrapolated_deficiency);
        }
        Artifact::Check(a) => {
            let kinds = [
                CertificateKind::CF,
                CertificateKind::AssumptionC,
                CertificateKind::PhiDomination,
            ];
            let _ = writeln!(
                out,
                "{:>6}  {:>10}  {:>10}  {:>10}  {:>6}  {:>12}  {:>14}",
                "N", "a", "b", "p", "CF", "AssumptionC", "PhiDomination"
            );
            let _ = writeln!(out, "{:>6}  resolvent bound cells", "");
            for row in &a.rows {
                let cells: Vec<&str> = kinds
                    .iter()
                    .map(|k| {
                        row.certificates
                            .iter()
                            .find(|c| c.kind == *k)
                            .map_or("-", |c| mark(c.passed()))
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{:>6}  {:>10.4e}  {:>10.4e}  {:>10.4}  {:>6}  {:>12}  {:>14}",
                    row.n, row.constants.a, row.constants.b, row.constants.p, cells[0], cells[1], cells[2]
                );
                let passed = row.resolvent_bounds.iter().filter(|r| r.check.passed).count();
                let _ = writeln!(out, "{:>6}  {passed}/{} pass", "", row.resolvent_bounds.len());
            }
            let _ = writeln!(out, "verdict: {}", mark(a.verdict.passed()));
        }
        Artifact::Fit(a) => {
            let _ = writeln!(out, "{:>6}  {:>12}  {:>12}  {:>6}  {:>8}", "N", "a", "b", "p", "feasible");
            for f in &a.fits {
                let _ = writeln!(
                    out,
                    "{:>6}  {:>12.6e}  {:>12.6e}  {:>6.3}  {:>8}",
                    f.certificate.n,
                    f.a,
                    f.b,
                    f.p,
                    mark(f.feasible)
                );
            }
            let _ = writeln!(out, "largest relative change across the ladder: {:.3e}", a.max_relative_change);
            let _ = writeln!(out, "verdict: {}", mark(a.verdict.passed()));
        }
        Artifact::Bound(a) => {
            let c = &a.certificate;
            let _ = writeln!(out, "n = {}, a = {:.6e}, p = {:.6}, slack = {:.2e}", c.n, c.a, c.p, c.slack);
            let _ = writeln!(out, "{:>12}  {:>14}  {:>6}", "eps", "margin", "");
            for (eps, m) in c.eps_grid.iter().zip(&c.margins) {
                let _ = writeln!(out, "{eps:>12.4e}  {m:>14.6e}  {:>6}", mark(*m >= -c.slack));
            }
            let _ = writeln!(out, "verdict: {}", mark(c.passed()));
        }
    }
    Ok(out)
}
