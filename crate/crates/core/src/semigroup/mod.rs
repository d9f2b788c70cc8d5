//! Propagator, Heisenberg evolution, minimal-solution iteration, resolvent
//! maps `P_λ`/`Q_λ`, resolvent series and leakage.

mod evolve;
mod minimal;
mod resolvent;

pub use evolve::{
    evolve_heisenberg, evolve_heisenberg_with, evolve_trajectory, EvolveOptions, Integrator,
    SUPEROPERATOR_EVOLVE_MAX_DIM,
};
pub use minimal::{minimal_iterate, minimal_iterate_with, MinimalOptions};
pub use resolvent::{
    p_lambda, q_lambda, resolvent_direct, resolvent_series, DiagnosticTrace, ResolventEngine, SeriesOptions,
    SeriesValue,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{geometric_extrapolation, Extrapolation};
use crate::error::{Error, Result};
use crate::generator::{LindbladModel, Mode};
use crate::linops::{c, expm, identity, CMat, CVec, C64};

/// `P(t) = e^{tG}`.
pub fn propagate(model: &LindbladModel, t: f64) -> Result<CMat> {
    expm(model.g(), t)
}

/// A state specified independently of the truncation size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSelector {
    /// Basis vector `|n⟩`.
    Index(usize),
    /// Explicit amplitudes, zero-padded to the model dimension and normalised.
    Vector {
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
}

impl StateSelector {
    pub fn resolve(&self, dim: usize) -> Result<CVec> {
        match self {
            StateSelector::Index(n) => {
                if *n >= dim {
                    return Err(Error::input(format!("basis index {n} outside dimension {dim}")));
                }
                let mut u = CVec::zeros(dim);
                u[*n] = c(1.0);
                Ok(u)
            }
            StateSelector::Vector { re, im } => {
                if let Some(im) = im {
                    if im.len() != re.len() {
                        return Err(Error::input("real and imaginary parts differ in length"));
                    }
                }
                if re.len() > dim {
                    return Err(Error::input(format!("state has {} amplitudes, dimension is {dim}", re.len())));
                }
                let mut u = CVec::zeros(dim);
                for (k, r) in re.iter().enumerate() {
                    let i = im.as_ref().map_or(0.0, |v| v[k]);
                    u[k] = C64::new(*r, i);
                }
                let norm = u.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::input("state vector must be finite and non-zero"));
                }
                Ok(u.unscale(norm))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            StateSelector::Index(n) => format!("|{n}>"),
            StateSelector::Vector { re, .. } => format!("vector[{}]", re.len()),
        }
    }
}

/// `t ↦ 1 − ⟨u, T_t(I) u⟩` for a unit vector `u`; absorbing models only.
pub fn leakage_curve(model: &LindbladModel, u: &CVec, t_grid: &[f64]) -> Result<Vec<f64>> {
    if model.mode() != Mode::Absorbing {
        return Err(Error::contract(
            "leakage is identically zero in exact mode; use an absorbing truncation",
        ));
    }
    if u.len() != model.dim() {
        return Err(Error::input("state length does not match model"));
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| t_grid[i]).collect();
    let states = evolve_trajectory(model, &identity(model.dim()), &sorted, &EvolveOptions::default())?;
    let norm = u.norm_squared();
    let mut out = vec![0.0; t_grid.len()];
    for (slot, ts) in order.iter().zip(&states) {
        out[*slot] = 1.0 - u.dotc(&(ts * u)).re / norm;
    }
    Ok(out)
}

/// Leakage and deficiency along a truncation ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    #[serde(rename = "N_ladder")]
    pub n_ladder: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub lambda: f64,
    pub u_label: String,
    /// `leakage[i][j]` at `N_ladder[i]`, `t_grid[j]`.
    pub leakage: Vec<Vec<f64>>,
    /// `1 − λ⟨u, R_λ(I) u⟩` per ladder size.
    pub deficiency: Vec<f64>,
    pub extrapolated_deficiency: Extrapolation,
}

/// Compute leakage curves and deficiencies for each model of an ascending ladder.
pub fn leakage_report(
    models: &[LindbladModel],
    u: &StateSelector,
    t_grid: &[f64],
    lambda: f64,
) -> Result<LeakageReport> {
    if models.is_empty() || t_grid.is_empty() {
        return Err(Error::input("ladder and time grid must be non-empty"));
    }
    let rows: Vec<Result<(Vec<f64>, f64)>> = models
        .par_iter()
        .map(|model| {
            let state = u.resolve(model.dim())?;
            let leak = leakage_curve(model, &state, t_grid)?;
            let engine = ResolventEngine::new(model)?;
            let series = engine.resolvent_series(lambda, &identity(model.dim()), 1.0, &state, &SeriesOptions::default())?;
            Ok((leak, 1.0 - lambda * series.value))
        })
        .collect();
    let mut leakage = Vec::with_capacity(rows.len());
    let mut deficiency = Vec::with_capacity(rows.len());
    for row in rows {
        let (l, d) = row?;
        leakage.push(l);
        deficiency.push(d);
    }
    let n_ladder: Vec<usize> = models.iter().map(LindbladModel::dim).collect();
    let extrapolated_deficiency = geometric_extrapolation(&n_ladder, &deficiency)?;
    Ok(LeakageReport {
        n_ladder,
        t_grid: t_grid.to_vec(),
        lambda,
        u_label: u.label(),
        leakage,
        deficiency,
        extrapolated_deficiency,
    })
}
