use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{lindblad_apply, superoperator_matrix, LindbladModel};
use crate::linops::{expm, max_abs, op_norm, unvec, vec_of, CMat, CVec, ZERO};

/// Dimension limit for the superoperator-exponential path.
pub const SUPEROPERATOR_EVOLVE_MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Sector-exact for phase-covariant models, step doubling otherwise.
    Auto,
    /// Exact exponential of each diagonal band `X_{i,i+d}`.
    SectorExact,
    /// Classical RK4 with step-doubling error control.
    StepDoubling,
    /// `exp(tS)` of the explicit superoperator; small dimensions only.
    Superoperator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub integrator: Integrator,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::Auto,
            tol: 1e-9,
            max_steps: 2_000_000,
        }
    }
}

/// `T_t(X)` with default options.
pub fn evolve_heisenberg(model: &LindbladModel, x: &CMat, t: f64) -> Result<CMat> {
    evolve_heisenberg_with(model, x, t, &EvolveOptions::default())
}

pub fn evolve_heisenberg_with(model: &LindbladModel, x: &CMat, t: f64, opts: &EvolveOptions) -> Result<CMat> {
    Ok(evolve_trajectory(model, x, &[t], opts)?.pop().expect("one time requested"))
}

/// `T_t(X)` at each of the ascending times.
pub fn evolve_trajectory(model: &LindbladModel, x: &CMat, times: &[f64], opts: &EvolveOptions) -> Result<Vec<CMat>> {
    if x.shape() != model.h().shape() {
        return Err(Error::input("operator shape does not match model"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::input("evolution times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("evolution times must be ascending"));
    }
    match resolve(model, opts.integrator)? {
        Integrator::SectorExact => {
            let offsets = model
                .phase_offsets()
                .ok_or_else(|| Error::contract("sector-exact evolution needs a phase-covariant model"))?;
            let sectors = SectorEvolution::new(model, &offsets, x);
            sectors.trajectory(times)
        }
        Integrator::Superoperator => {
            if model.dim() > SUPEROPERATOR_EVOLVE_MAX_DIM {
                return Err(Error::input(format!(
                    "superoperator evolution limited to dim <= {SUPEROPERATOR_EVOLVE_MAX_DIM}"
                )));
            }
            let s = superoperator_matrix(model)?;
            let v = vec_of(x);
            times
                .iter()
                .map(|&t| Ok(unvec(&(expm(&s, t)? * &v), model.dim())))
                .collect()
        }
        Integrator::StepDoubling | Integrator::Auto => {
            let mut out = Vec::with_capacity(times.len());
            let mut state = x.clone();
            let mut now = 0.0;
            let mut h = initial_step(model);
            for &t in times {
                h = rk4_doubling(model, &mut state, now, t, h, opts)?;
                now = t;
                out.push(state.clone());
            }
            Ok(out)
        }
    }
}

fn resolve(model: &LindbladModel, integrator: Integrator) -> Result<Integrator> {
    Ok(match integrator {
        Integrator::Auto => {
            if model.phase_offsets().is_some() {
                Integrator::SectorExact
            } else {
                Integrator::StepDoubling
            }
        }
        other => other,
    })
}

fn initial_step(model: &LindbladModel) -> f64 {
    let scale = 2.0 * op_norm(model.g()) + model.jump_ops().iter().map(|l| op_norm(l).powi(2)).sum::<f64>();
    0.5 / (1.0 + scale)
}

fn rk4_step(model: &LindbladModel, x: &CMat, h: f64) -> Result<CMat> {
    let k1 = lindblad_apply(model, x)?;
    let k2 = lindblad_apply(model, &(x + k1.scale(0.5 * h)))?;
    let k3 = lindblad_apply(model, &(x + k2.scale(0.5 * h)))?;
    let k4 = lindblad_apply(model, &(x + k3.scale(h)))?;
    Ok(x + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0))
}

/// Advance `state` from `from` to `to`; returns the step size to continue with.
fn rk4_doubling(
    model: &LindbladModel,
    state: &mut CMat,
    from: f64,
    to: f64,
    mut h: f64,
    opts: &EvolveOptions,
) -> Result<f64> {
    let mut t = from;
    let mut steps = 0usize;
    let floor = 1e-14 * to.max(1.0);
    while t < to {
        let step = h.min(to - t);
        let full = rk4_step(model, state, step)?;
        let half = rk4_step(model, state, 0.5 * step)?;
        let half = rk4_step(model, &half, 0.5 * step)?;
        let diff = &half - &full;
        let err = max_abs(&diff) / 15.0;
        let scale = opts.tol * (1.0 + max_abs(&half));
        let factor = if err == 0.0 { 5.0 } else { 0.9 * (scale / err).powf(0.2) };
        if err <= scale {
            *state = &half + diff.scale(1.0 / 15.0);
            t += step;
            if step == h {
                h *= factor.clamp(1.0, 5.0);
            }
        } else {
            h = step * factor.clamp(0.2, 0.9);
            if h < floor {
                return Err(Error::numeric(format!(
                    "step size underflow at t = {t:.6e}: h = {h:.3e}, local error {err:.3e} vs target {scale:.3e}"
                )));
            }
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::numeric(format!(
                "exceeded {} integration steps at t = {t:.6e} (h = {h:.3e}); problem is too stiff for RK4",
                opts.max_steps
            )));
        }
    }
    Ok(h)
}

/// Each diagonal band `X_{i,i+d}` evolves under its own generator
/// `K_d` when `G` is diagonal and every jump operator shifts by a fixed offset.
struct SectorEvolution {
    dim: usize,
    sectors: Vec<(i64, CMat, CVec)>,
}

impl SectorEvolution {
    fn new(model: &LindbladModel, offsets: &[i64], x: &CMat) -> Self {
        let n = model.dim() as i64;
        let g: Vec<_> = (0..model.dim()).map(|i| model.g()[(i, i)]).collect();
        let mut sectors = Vec::new();
        for d in -(n - 1)..n {
            let start = (-d).max(0);
            let stop = n.min(n - d);
            let len = (stop - start) as usize;
            let init = CVec::from_iterator(len, (start..stop).map(|i| x[(i as usize, (i + d) as usize)]));
            if init.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mut k = CMat::zeros(len, len);
            for p in 0..len {
                let i = start + p as i64;
                let j = i + d;
                k[(p, p)] += g[j as usize] + g[i as usize].conj();
                for (l, &s) in model.jump_ops().iter().zip(offsets) {
                    let (ri, rj) = (i + s, j + s);
                    if ri < 0 || rj < 0 || ri >= n || rj >= n {
                        continue;
                    }
                    let q = (ri - start) as usize;
                    k[(p, q)] += l[(ri as usize, i as usize)].conj() * l[(rj as usize, j as usize)];
                }
            }
            sectors.push((d, k, init));
        }
        Self {
            dim: model.dim(),
            sectors,
        }
    }

    /// States at ascending times, stepping each band with `exp(K_d Δ)` and
    /// reusing exponentials for repeated increments.
    fn trajectory(&self, times: &[f64]) -> Result<Vec<CMat>> {
        let mut out = vec![CMat::zeros(self.dim, self.dim); times.len()];
        for (d, k, init) in &self.sectors {
            let mut cache: Vec<(f64, CMat)> = Vec::new();
            let mut state = init.clone();
            let mut now = 0.0;
            let start = (-d).max(0);
            for (slot, &t) in times.iter().enumerate() {
                let dt = t - now;
                if dt > 0.0 {
                    let pos = cache.iter().position(|(c, _)| (c - dt).abs() <= 1e-11 * dt);
                    let step = match pos {
                        Some(i) => &cache[i].1,
                        None => {
                            if cache.len() >= 64 {
                                cache.remove(0);
                            }
                            cache.push((dt, expm(k, dt)?));
                            &cache.last().expect("just pushed").1
                        }
                    };
                    state = step * &state;
                    now = t;
                }
                for (p, z) in state.iter().enumerate() {
                    let i = start + p as i64;
                    out[slot][(i as usize, (i + d) as usize)] = *z;
                }
            }
        }
        Ok(out)
    }
}
