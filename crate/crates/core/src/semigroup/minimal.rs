use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::generator::LindbladModel;
use crate::linops::{expm, max_abs, op_norm, CMat};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalOptions {
    /// Chebyshev–Lobatto master nodes on `[0, t]` carrying `T^{(n)}_s`.
    pub masters: usize,
    /// Gauss–Legendre order of the inner `ds` integral.
    pub inner_order: usize,
    /// Stop once `‖T^{(n+1)} − T^{(n)}‖ ≤ tol·(1 + ‖X‖)`.
    pub tol: f64,
}

impl Default for MinimalOptions {
    fn default() -> Self {
        Self {
            masters: 33,
            inner_order: 32,
            tol: 1e-10,
        }
    }
}

/// Iterates `T^{(0)}_t(X), T^{(1)}_t(X), …` of the minimal-solution
/// construction, stopping at `n_max` or when the increments fall below
/// `opts.tol`.
pub fn minimal_iterate(model: &LindbladModel, x: &CMat, t: f64, n_max: usize) -> Result<Vec<CMat>> {
    minimal_iterate_with(model, x, t, n_max, &MinimalOptions::default())
}

pub fn minimal_iterate_with(
    model: &LindbladModel,
    x: &CMat,
    t: f64,
    n_max: usize,
    opts: &MinimalOptions,
) -> Result<Vec<CMat>> {
    if x.shape() != model.h().shape() {
        return Err(Error::input("operator shape does not match model"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::input(format!("time must be finite and >= 0, got {t}")));
    }
    if opts.masters < 2 || opts.inner_order < 2 {
        return Err(Error::input("minimal iteration needs at least two master and inner nodes"));
    }
    let g = model.g();
    let p_t = expm(g, t)?;
    let first = p_t.adjoint() * x * &p_t;
    if t == 0.0 || model.jump_ops().is_empty() || max_abs(x) == 0.0 {
        return Ok(vec![first]);
    }

    let mc = opts.masters;
    let masters: Vec<f64> = (0..mc)
        .map(|m| 0.5 * t * (1.0 - (PI * m as f64 / (mc - 1) as f64).cos()))
        .collect();
    let bary: Vec<f64> = (0..mc)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == mc - 1 {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();
    let interp = |s: f64| -> Vec<f64> {
        if let Some(j) = masters.iter().position(|&m| (m - s).abs() <= 1e-15 * t) {
            let mut w = vec![0.0; mc];
            w[j] = 1.0;
            return w;
        }
        let raw: Vec<f64> = (0..mc).map(|j| bary[j] / (s - masters[j])).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    };

    // Kernel data per master node: inner weights, interpolation rows and L_l P(τ − s).
    struct Cell {
        weight: f64,
        interp: Vec<f64>,
        kernels: Vec<CMat>,
    }
    let build_cells = |order: usize, tau: f64| -> Result<Vec<Cell>> {
        let (xi, wi) = gauss_legendre(order);
        let mut cells = Vec::with_capacity(order);
        for (x_q, w_q) in xi.iter().zip(&wi) {
            let s = 0.5 * tau * (1.0 + x_q);
            let prop = expm(g, tau - s)?;
            cells.push(Cell {
                weight: 0.5 * tau * w_q,
                interp: interp(s),
                kernels: model.jump_ops().iter().map(|l| l * &prop).collect(),
            });
        }
        Ok(cells)
    };
    let mut grid: Vec<Vec<Cell>> = Vec::with_capacity(mc);
    let mut base: Vec<CMat> = Vec::with_capacity(mc);
    for &tau in &masters {
        let p = expm(g, tau)?;
        base.push(p.adjoint() * x * &p);
        grid.push(if tau == 0.0 { Vec::new() } else { build_cells(opts.inner_order, tau)? });
    }

    let sweep = |current: &[CMat], cells: &[Cell]| -> CMat {
        let dim = model.dim();
        let mut acc = CMat::zeros(dim, dim);
        for cell in cells {
            let mut ts = CMat::zeros(dim, dim);
            for (w, tm) in cell.interp.iter().zip(current) {
                if *w != 0.0 {
                    ts += tm.scale(*w);
                }
            }
            for k in &cell.kernels {
                acc += (k.adjoint() * &ts * k).scale(cell.weight);
            }
        }
        acc
    };

    // Quadrature sanity: the first correction at the final node with half the order.
    let coarse = build_cells(opts.inner_order / 2, t)?;
    let fine_first = sweep(&base, &grid[mc - 1]);
    let coarse_first = sweep(&base, &coarse);
    let scale = op_norm(&fine_first).max(1e-300);
    let qerr = op_norm(&(&fine_first - &coarse_first));
    if qerr > 1e-6 * scale.max(max_abs(x)) {
        return Err(Error::numeric(format!(
            "inner quadrature not converged: order {} vs {} differ by {qerr:.3e}",
            opts.inner_order,
            opts.inner_order / 2
        )));
    }

    let x_scale = 1.0 + op_norm(x);
    let mut current = base.clone();
    let mut out = vec![first];
    for _ in 0..n_max {
        let next: Vec<CMat> = (0..mc).map(|m| &base[m] + sweep(&current, &grid[m])).collect();
        let step = op_norm(&(&next[mc - 1] - &current[mc - 1]));
        out.push(next[mc - 1].clone());
        current = next;
        if step <= opts.tol * x_scale {
            break;
        }
    }
    Ok(out)
}
