use crate::error::{Error, Result};
use crate::hilbert::FockBasis;
use crate::linops::{c, CMat};
use crate::quad::{gauss_legendre_on, hermite_functions, GaussHermite};

/// Quadrature used for `⟨h_m|v|h_n⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialQuadrature {
    /// Gauss–Hermite with the given order; exact for polynomial `v` of
    /// degree `≤ 2·order − 2·N + 1`.
    GaussHermite { order: usize },
    /// Gauss–Legendre panels on each half-line, geometrically graded
    /// towards the origin. For potentials with a kink or an integrable
    /// derivative singularity at zero, such as `|x|^ν`.
    SplitAtOrigin,
}

impl PotentialQuadrature {
    /// Order `2N + 8`.
    pub fn default_for(basis: &FockBasis) -> Self {
        PotentialQuadrature::GaussHermite {
            order: 2 * basis.size + 8,
        }
    }
}

fn split_rule(size: usize) -> (Vec<f64>, Vec<f64>) {
    const POINTS: usize = 20;
    const GRADING_LEVELS: i32 = 48;
    const PANEL: f64 = 0.25;
    let reach = (2.0 * size as f64 + 1.0).sqrt() + 10.0;
    let mut breaks = vec![0.0];
    for k in (0..GRADING_LEVELS).rev() {
        breaks.push(0.5_f64.powi(k));
    }
    let mut x = 1.0;
    while x < reach {
        x = (x + PANEL).min(reach);
        breaks.push(x);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let (xs, ws) = gauss_legendre_on(POINTS, w[0], w[1]);
        for (xi, wi) in xs.iter().zip(&ws) {
            nodes.push(*xi);
            weights.push(*wi);
            nodes.push(-*xi);
            weights.push(*wi);
        }
    }
    (nodes, weights)
}

/// Matrix of the multiplication operator `v(x)` in the Hermite-function basis.
pub fn potential_op(
    v: impl Fn(f64) -> f64,
    basis: &FockBasis,
    quadrature: PotentialQuadrature,
) -> Result<CMat> {
    let n = basis.size;
    let (nodes, weights) = match quadrature {
        PotentialQuadrature::GaussHermite { order } => {
            if order < 2 * n + 8 {
                return Err(Error::input(format!(
                    "Gauss–Hermite order {order} below the minimum 2N+8 = {}",
                    2 * n + 8
                )));
            }
            let gh = GaussHermite::new(order);
            (gh.nodes, gh.scaled_weights)
        }
        PotentialQuadrature::SplitAtOrigin => split_rule(n),
    };
    let mut out = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (x, w) in nodes.iter().zip(&weights) {
        let value = v(*x);
        if !value.is_finite() {
            return Err(Error::input(format!("potential is not finite at node x = {x}")));
        }
        let h = hermite_functions(*x, n);
        let wv = w * value;
        for j in 0..n {
            let hj = wv * h[j];
            if hj == 0.0 {
                continue;
            }
            for i in 0..n {
                out[(i, j)] += h[i] * hj;
            }
        }
    }
    let sym = (&out + out.transpose()) * 0.5;
    Ok(sym.map(c))
}
