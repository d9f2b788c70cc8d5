use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::LindbladModel;
use crate::linops::{max_abs, op_norm, CMat, CVec, SylvesterSolver};
use crate::quad::gauss_legendre;

use super::evolve::{evolve_trajectory, EvolveOptions};

/// Sequences `k ↦ ⟨u, Q_λᵏ(I) u⟩` with their weighted partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticTrace {
    pub lambda: f64,
    pub x_weight: f64,
    pub u_label: String,
    pub values: Vec<f64>,
    /// `Σ_{k≤K} values[k] / (k+1)`.
    pub weighted_partial_sums: Vec<f64>,
    /// `Σ_{k≤K} x_weightᵏ values[k]`.
    pub x_partial_sums: Vec<f64>,
    /// True when the values fell below `1e−10·values[0]` before the cap.
    pub converged: bool,
}

impl DiagnosticTrace {
    /// Largest `values[k+1] − values[k]`; non-positive for a monotone trace.
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.values.iter().all(|v| *v >= -slack) && self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn weighted_series(&self) -> f64 {
        self.weighted_partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Outcome of a truncated resolvent series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Number of terms summed.
    pub terms: usize,
    /// For `x < 1` a rigorous bound on the omitted tail; for `x = 1` the
    /// last increment, which is only an indicator.
    pub tail_bound: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            k_min: 8,
            k_max: 512,
        }
    }
}

/// Cached Schur factorisation of `G` with the jump operators expressed in
/// the Schur basis, so `Q_λ` iterates never leave Schur coordinates.
#[derive(Debug, Clone)]
pub struct ResolventEngine {
    solver: SylvesterSolver,
    ls_schur: Vec<CMat>,
    dim: usize,
}

impl ResolventEngine {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        let solver = SylvesterSolver::new(model.g())?;
        let q = solver.basis();
        let ls_schur = model.jump_ops().iter().map(|l| q.adjoint() * l * q).collect();
        Ok(Self {
            solver,
            ls_schur,
            dim: model.dim(),
        })
    }

    fn check(&self, x: &CMat) -> Result<()> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::input(format!(
                "operator shape {:?} does not match model dim {}",
                x.shape(),
                self.dim
            )));
        }
        Ok(())
    }

    fn gain_schur(&self, z: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for l in &self.ls_schur {
            out += l.adjoint() * z * l;
        }
        out
    }

    fn p_schur(&self, lambda: f64, z: &CMat) -> Result<CMat> {
        self.solver.solve_schur(lambda, z)
    }

    fn q_schur(&self, lambda: f64, z: &CMat) -> Result<CMat> {
        self.solver.solve_schur(lambda, &self.gain_schur(z))
    }

    fn schur_state(&self, u: &CVec) -> Result<CVec> {
        if u.len() != self.dim {
            return Err(Error::input(format!("state has length {}, model dim {}", u.len(), self.dim)));
        }
        Ok(self.solver.basis().adjoint() * u)
    }

    /// `P_λ(X)`: solution of `λY − G†Y − YG = X`.
    pub fn p_lambda(&self, lambda: f64, x: &CMat) -> Result<CMat> {
        self.check(x)?;
        self.solver.solve(lambda, x)
    }

    /// `Q_λ(X)`: solution of `λY − G†Y − YG = Σ L†XL`.
    pub fn q_lambda(&self, lambda: f64, x: &CMat) -> Result<CMat> {
        self.check(x)?;
        let z = self.q_schur(lambda, &self.solver.to_schur(x))?;
        Ok(self.solver.from_schur(&z))
    }

    /// `R^{(n)}_{λ,x}(X)` for `n = 0..=steps` via
    /// `R^{(n+1)} = P_λ(X) + x·Q_λ(R^{(n)})`, `R^{(0)} = P_λ(X)`.
    pub fn resolvent_iterates(&self, lambda: f64, x: &CMat, weight: f64, steps: usize) -> Result<Vec<CMat>> {
        self.check(x)?;
        let p = self.p_schur(lambda, &self.solver.to_schur(x))?;
        let mut r = p.clone();
        let mut out = vec![self.solver.from_schur(&r)];
        for _ in 0..steps {
            r = &p + self.q_schur(lambda, &r)?.scale(weight);
            out.push(self.solver.from_schur(&r));
        }
        Ok(out)
    }

    /// `k ↦ ⟨u, Q_λᵏ(I) u⟩` until the values drop below `1e−10·values[0]` or `k_max`.
    pub fn q_power_trace(&self, lambda: f64, u: &CVec, x_weight: f64, k_max: usize, u_label: &str) -> Result<DiagnosticTrace> {
        if !(0.0..=1.0).contains(&x_weight) {
            return Err(Error::input(format!("x weight must lie in [0, 1], got {x_weight}")));
        }
        let us = self.schur_state(u)?;
        let mut z = CMat::identity(self.dim, self.dim);
        let mut values = Vec::new();
        let mut weighted = Vec::new();
        let mut xsums = Vec::new();
        let (mut wsum, mut xsum, mut xpow) = (0.0, 0.0, 1.0);
        let mut converged = false;
        for k in 0..=k_max {
            let v = quad_form(&z, &us);
            values.push(v);
            wsum += v / (k as f64 + 1.0);
            xsum += xpow * v;
            xpow *= x_weight;
            weighted.push(wsum);
            xsums.push(xsum);
            if v <= 1e-10 * values[0] || max_abs(&z) == 0.0 {
                converged = true;
                break;
            }
            if k < k_max {
                z = self.q_schur(lambda, &z)?;
            }
        }
        Ok(DiagnosticTrace {
            lambda,
            x_weight,
            u_label: u_label.to_string(),
            values,
            weighted_partial_sums: weighted,
            x_partial_sums: xsums,
            converged,
        })
    }

    /// `⟨u, R_{λ,x}(X) u⟩ = Σ_k xᵏ ⟨u, Q_λᵏ(P_λ(X)) u⟩`.
    pub fn resolvent_series(&self, lambda: f64, x: &CMat, weight: f64, u: &CVec, opts: &SeriesOptions) -> Result<SeriesValue> {
        self.check(x)?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::input(format!("x weight must lie in [0, 1], got {weight}")));
        }
        let us = self.schur_state(u)?;
        let unorm = us.norm_squared();
        let mut z = self.p_schur(lambda, &self.solver.to_schur(x))?;
        let p_norm = op_norm(&z);
        let first = quad_form(&z, &us);
        let mut value = first;
        if weight == 0.0 || p_norm == 0.0 {
            return Ok(SeriesValue {
                value,
                terms: 1,
                tail_bound: 0.0,
                converged: true,
            });
        }
        let mut xpow = 1.0;
        let mut last = first;
        for k in 1..=opts.k_max {
            if weight < 1.0 {
                let tail = xpow * weight / (1.0 - weight) * p_norm * unorm;
                if tail <= opts.tol {
                    return Ok(SeriesValue {
                        value,
                        terms: k,
                        tail_bound: tail,
                        converged: true,
                    });
                }
            }
            z = self.q_schur(lambda, &z)?;
            xpow *= weight;
            let term = quad_form(&z, &us);
            value += xpow * term;
            last = xpow * term;
            let vanished = max_abs(&z) == 0.0;
            if weight == 1.0 && k >= opts.k_min && (term.abs() <= 1e-10 * first.abs().max(opts.tol) || vanished) {
                return Ok(SeriesValue {
                    value,
                    terms: k + 1,
                    tail_bound: term.abs(),
                    converged: true,
                });
            }
            if vanished {
                return Ok(SeriesValue {
                    value,
                    terms: k + 1,
                    tail_bound: 0.0,
                    converged: true,
                });
            }
        }
        let tail_bound = if weight < 1.0 {
            xpow * weight / (1.0 - weight) * p_norm * unorm
        } else {
            last.abs()
        };
        Ok(SeriesValue {
            value,
            terms: opts.k_max + 1,
            tail_bound,
            converged: false,
        })
    }
}

fn quad_form(z: &CMat, u: &CVec) -> f64 {
    u.dotc(&(z * u)).re
}

/// `P_λ(X)` for a single call.
pub fn p_lambda(model: &LindbladModel, x: &CMat, lambda: f64) -> Result<CMat> {
    ResolventEngine::new(model)?.p_lambda(lambda, x)
}

/// `Q_λ(X)` for a single call.
pub fn q_lambda(model: &LindbladModel, x: &CMat, lambda: f64) -> Result<CMat> {
    ResolventEngine::new(model)?.q_lambda(lambda, x)
}

pub fn resolvent_series(model: &LindbladModel, x: &CMat, lambda: f64, weight: f64, u: &CVec) -> Result<SeriesValue> {
    ResolventEngine::new(model)?.resolvent_series(lambda, x, weight, u, &SeriesOptions::default())
}

/// `∫₀^∞ e^{−λs} ⟨u, T_s(X) u⟩ ds` by composite Gauss–Legendre panels on
/// `[0, T]`, panel count doubled until two passes agree to `tol`; the
/// omitted tail is bounded by `‖X‖‖u‖² e^{−λT}/λ ≤ tol/10`.
pub fn resolvent_direct(model: &LindbladModel, x: &CMat, lambda: f64, u: &CVec, tol: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::input(format!("lambda must be > 0, got {lambda}")));
    }
    if u.len() != model.dim() {
        return Err(Error::input("state length does not match model"));
    }
    let bound = op_norm(x) * u.norm_squared();
    if bound == 0.0 {
        return Ok(0.0);
    }
    let horizon = ((bound / (lambda * 0.1 * tol)).ln() / lambda).max(1.0 / lambda);
    const ORDER: usize = 16;
    let (xi, wi) = gauss_legendre(ORDER);
    let opts = EvolveOptions {
        tol: (tol * 1e-2).clamp(1e-12, 1e-9),
        ..EvolveOptions::default()
    };
    let integrate = |panels: usize| -> Result<f64> {
        let width = horizon / panels as f64;
        let mut nodes = Vec::with_capacity(panels * ORDER);
        let mut weights = Vec::with_capacity(panels * ORDER);
        for p in 0..panels {
            let a = p as f64 * width;
            for (x_q, w_q) in xi.iter().zip(&wi) {
                nodes.push(a + 0.5 * width * (1.0 + x_q));
                weights.push(0.5 * width * w_q);
            }
        }
        let states = evolve_trajectory(model, x, &nodes, &opts)?;
        Ok(states
            .iter()
            .zip(nodes.iter().zip(&weights))
            .map(|(ts, (s, w))| w * (-lambda * s).exp() * quad_form(ts, u))
            .sum())
    };
    let mut panels = 4;
    let mut prev = integrate(panels)?;
    loop {
        panels *= 2;
        let next = integrate(panels)?;
        if (next - prev).abs() <= 0.5 * tol * next.abs().max(1.0) {
            return Ok(next);
        }
        if panels >= 1024 {
            return Err(Error::numeric(format!(
                "time quadrature did not settle: {panels} panels, last change {:.3e}",
                (next - prev).abs()
            )));
        }
        prev = next;
    }
}
