//! Relative bounds `‖Wφ‖² ≤ ε‖Δφ‖² + aε^{−p}‖φ‖²` of a multiplication
//! operator by the Laplacian: the Fourier constant chain and its check on a
//! periodic grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{CertificateKind, Verdict};
use crate::error::{Error, Result};
use crate::hilbert::{fourier_multiplier_matrix, GridBasis};
use crate::quad::integrate_half_line;

/// Largest grid handled by the dense eigenvalue certificate.
pub const MAX_GRID_NODES: usize = 1024;

/// `p = n / (4(1+α) − n)`; requires `n/(1+α) < 2`.
pub fn lemma41_exponent(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("dimension n must be positive"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::input(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let nf = n as f64;
    if nf / (1.0 + alpha) >= 2.0 {
        return Err(Error::Hypothesis(format!(
            "n/(1+alpha) < 2 is required; n = {n}, alpha = {alpha} gives {}",
            nf / (1.0 + alpha)
        )));
    }
    Ok(nf / (4.0 * (1.0 + alpha) - nf))
}

/// The constants of the Fourier argument, assembled step by step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma41Constants {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    /// `∫_{ℝⁿ} (|λ|⁴ + 1)^{−(1+α)} dλ`
    pub c_lambda: f64,
    /// Sampled `‖W^{1+α}‖₂²`.
    pub w_norm_sq: f64,
    /// `C₁ = ‖W^{1+α}‖² (2π)^{−n} C_λ`
    pub c1: f64,
    /// `C₂ = C₁^{1/(1+α)}`
    pub c2: f64,
    /// `a = C₂^{4/(4−q)}`, `q = n/(1+α)`
    pub a: f64,
}

impl Lemma41Constants {
    pub fn q(&self) -> f64 {
        self.n as f64 / (1.0 + self.alpha)
    }

    /// Scaling radius with `ε = C₂ r^{−(4−q)}`.
    pub fn radius(&self, eps: f64) -> f64 {
        (eps / self.c2).powf(-1.0 / (4.0 - self.q()))
    }
}

fn lambda_integral(n: usize, alpha: f64) -> Result<f64> {
    let power = -(1.0 + alpha);
    let tol = 1e-13;
    match n {
        1 => Ok(2.0 * integrate_half_line(&|x: f64| (x.powi(4) + 1.0).powf(power), tol)?),
        2 => Ok(2.0 * PI * integrate_half_line(&|r: f64| r * (r.powi(4) + 1.0).powf(power), tol)?),
        _ => Err(Error::input(format!("grid constants implemented for n = 1, 2; got {n}"))),
    }
}

/// Constants `(a, p)` for sampled `W` on `grid`.
pub fn lemma41_constants(w: &[f64], n: usize, alpha: f64, grid: &GridBasis) -> Result<Lemma41Constants> {
    let p = lemma41_exponent(n, alpha)?;
    if grid.dim != n {
        return Err(Error::input(format!("grid dimension {} differs from n = {n}", grid.dim)));
    }
    if w.len() != grid.len() {
        return Err(Error::input(format!("{} samples for a grid of {} nodes", w.len(), grid.len())));
    }
    let powered: Vec<f64> = w.iter().map(|v| v.abs().powf(1.0 + alpha)).collect();
    let w_norm_sq = grid.l2_norm_sq(&powered);
    if !w_norm_sq.is_finite() {
        return Err(Error::Hypothesis("sampled W^{1+alpha} is not square integrable".into()));
    }
    let c_lambda = lambda_integral(n, alpha)?;
    let c1 = w_norm_sq * (2.0 * PI).powi(-(n as i32)) * c_lambda;
    let c2 = c1.powf(1.0 / (1.0 + alpha));
    let q = n as f64 / (1.0 + alpha);
    let a = c2.powf(4.0 / (4.0 - q));
    Ok(Lemma41Constants {
        n,
        alpha,
        p,
        c_lambda,
        w_norm_sq,
        c1,
        c2,
        a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeBoundCertificate {
    pub kind: CertificateKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub p: f64,
    pub a: f64,
    pub eps_grid: Vec<f64>,
    /// `min_eig(εΔ² + aε^{−p} − W²)` per ε; the bound holds when `≥ −slack`.
    pub margins: Vec<f64>,
    /// Scaling radii `r(ε)` when the constants come from the Fourier chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    pub grid: GridBasis,
    pub slack: f64,
    pub verdict: Verdict,
}

impl RelativeBoundCertificate {
    /// Attach `α` and the scaling radii of the constant chain.
    pub fn with_constants(mut self, k: &Lemma41Constants) -> Self {
        self.alpha = Some(k.alpha);
        self.radii = Some(self.eps_grid.iter().map(|&e| k.radius(e)).collect());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn check_grid(w: &[f64], grid: &GridBasis) -> Result<()> {
    if w.len() != grid.len() {
        return Err(Error::input(format!("{} samples for a grid of {} nodes", w.len(), grid.len())));
    }
    if grid.len() > MAX_GRID_NODES {
        return Err(Error::input(format!(
            "dense certificate limited to {MAX_GRID_NODES} grid nodes, got {}",
            grid.len()
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("W samples must be finite"));
    }
    Ok(())
}

/// Smallest eigenvalue of `εΔ² + aε^{−p} − diag(W²)` for each ε.
pub fn verify_relative_bound(
    w: &[f64],
    grid: &GridBasis,
    eps_grid: &[f64],
    a: f64,
    p: f64,
    slack: Option<f64>,
) -> Result<RelativeBoundCertificate> {
    check_grid(w, grid)?;
    if eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.is_empty() {
        return Err(Error::input("eps grid must be non-empty and positive"));
    }
    let bilap = fourier_multiplier_matrix(grid, |s| s * s);
    let bilap = (&bilap + bilap.transpose()) * 0.5;
    let w2: Vec<f64> = w.iter().map(|v| v * v).collect();
    let w2_max = w2.iter().copied().fold(0.0, f64::max);
    let k4_max = grid.momentum_squared().iter().map(|k| k * k).fold(0.0, f64::max);
    let margins: Vec<f64> = eps_grid
        .par_iter()
        .map(|&eps| {
            let shift = a * eps.powf(-p);
            let mut m = bilap.scale(eps);
            for (i, v) in w2.iter().enumerate() {
                m[(i, i)] += shift - v;
            }
            SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();
    let scale = eps_grid
        .iter()
        .map(|&e| e * k4_max + a * e.powf(-p) + w2_max)
        .fold(0.0, f64::max);
    let slack = slack.unwrap_or(1e-10 * (1.0 + scale));
    let ok = margins.iter().all(|m| *m >= -slack);
    Ok(RelativeBoundCertificate {
        kind: CertificateKind::RelativeBound,
        n: grid.dim,
        alpha: None,
        p,
        a,
        eps_grid: eps_grid.to_vec(),
        margins,
        radii: None,
        grid: *grid,
        slack,
        verdict: Verdict::from_bool(ok),
    })
}

/// Smallest `b` with `‖Wφ‖² ≤ b⟨φ, (−Δ + 1)φ⟩` on the grid: the top
/// eigenvalue of `(−Δ+1)^{−1/2} W² (−Δ+1)^{−1/2}`.
pub fn form_bound_constant(w: &[f64], grid: &GridBasis) -> Result<f64> {
    check_grid(w, grid)?;
    let k = fourier_multiplier_matrix(grid, |s| 1.0 / (1.0 - s).sqrt());
    let k = (&k + k.transpose()) * 0.5;
    let w2 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|v| v * v)));
    let b = &k * w2 * &k;
    let b = (&b + b.transpose()) * 0.5;
    Ok(SymmetricEigen::new(b).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}
