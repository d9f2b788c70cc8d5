//! Quadrature rules: Gauss–Legendre, scaled Gauss–Hermite and an adaptive
//! Gauss–Kronrod integrator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| half * wi).collect(),
    )
}

/// Normalised Hermite functions `h_0(x) … h_{count-1}(x)`.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * h0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Gauss–Hermite rule in Hermite-function form.
///
/// `∫ f(x) dx ≈ Σ scaled_weights[q] · f(nodes[q])` is exact whenever
/// `f = e^{-x²} · polynomial` of degree `≤ 2·order − 1`. The scaled weights
/// `w_q e^{x_q²}` are computed from the Christoffel sum so they stay accurate
/// at the outer nodes where `w_q` itself underflows.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss–Hermite rule needs at least one node");
        let jacobi = DMatrix::<f64>::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let qf = order as f64;
        let mut scaled_weights = Vec::with_capacity(order);
        for x in nodes.iter_mut() {
            for _ in 0..5 {
                let h = hermite_functions(*x, order + 1);
                let deriv = (2.0 * qf).sqrt() * h[order - 1] - *x * h[order];
                if deriv == 0.0 {
                    break;
                }
                let dx = h[order] / deriv;
                *x -= dx;
                if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            let h = hermite_functions(*x, order);
            scaled_weights.push(1.0 / h.iter().map(|v| v * v).sum::<f64>());
        }
        Self {
            nodes,
            scaled_weights,
        }
    }
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const GK15_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK15_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK15_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = fc * GK15_WK[7];
    let mut gauss = fc * GK15_WG[3];
    for k in 0..7 {
        let dx = half * GK15_X[k];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK15_WK[k] * s;
        if k % 2 == 1 {
            gauss += GK15_WG[k / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration on a finite interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        evaluations += 1;
        if !val.is_finite() {
            return Err(Error::numeric(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let local_tol = tol * (hi - lo) / (b - a);
        if err <= local_tol.max(1e-15 * val.abs()) || depth >= 50 {
            total += val;
        } else {
            if evaluations > 200_000 {
                return Err(Error::numeric("adaptive quadrature did not converge"));
            }
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// `∫₀^∞ f(x) dx` via `x = s / (1 − s)`.
pub fn integrate_half_line(f: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mapped = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let x = s / (1.0 - s);
        let jac = 1.0 / ((1.0 - s) * (1.0 - s));
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&mapped, 0.0, 1.0, tol)
}
