//! Bartels–Stewart style solver for `λY − G†Y − YG = F`.
//!
//! With the complex Schur form `G = Q T Q†` the equation becomes
//! `λZ − T†Z − ZT = Q†FQ` for `Z = Q†YQ`, which is solved row by row
//! since `T†` is lower and `T` upper triangular. One factorisation serves
//! any number of right-hand sides and shifts.

use super::{is_finite, max_abs, max_eig, CMat, C64, ZERO};
use crate::error::{Error, Result};

/// Smallest admissible `|λ − conj(t_ii) − t_jj|`.
pub const SHIFT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SylvesterSolver {
    q: CMat,
    t: CMat,
}

impl SylvesterSolver {
    /// Factor `G`. Requires `G + G† ⪯ tol`, i.e. a contraction generator.
    pub fn new(g: &CMat) -> Result<Self> {
        super::require_square(g, "generator")?;
        if !is_finite(g) {
            return Err(Error::input("generator has non-finite entries"));
        }
        let dissipation = g + g.adjoint();
        let top = max_eig(&dissipation)?;
        let tol = 1e-9 * (1.0 + max_abs(g));
        if top > tol {
            return Err(Error::contract(format!(
                "G + G† has positive eigenvalue {top:.3e}; G does not generate a contraction"
            )));
        }
        let (q, t) = g.clone().schur().unpack();
        Ok(Self { q, t })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Unitary Schur basis `Q`.
    pub fn basis(&self) -> &CMat {
        &self.q
    }

    /// Upper-triangular Schur factor `T`.
    pub fn triangular(&self) -> &CMat {
        &self.t
    }

    pub fn to_schur(&self, x: &CMat) -> CMat {
        self.q.adjoint() * x * &self.q
    }

    pub fn from_schur(&self, z: &CMat) -> CMat {
        &self.q * z * self.q.adjoint()
    }

    /// Solve `λY − G†Y − YG = rhs`.
    pub fn solve(&self, lambda: f64, rhs: &CMat) -> Result<CMat> {
        if rhs.shape() != self.t.shape() {
            return Err(Error::input(format!(
                "rhs shape {:?} does not match generator {:?}",
                rhs.shape(),
                self.t.shape()
            )));
        }
        let z = self.solve_schur(lambda, &self.to_schur(rhs))?;
        Ok(self.from_schur(&z))
    }

    /// Triangular stage: solve `λZ − T†Z − ZT = f` in Schur coordinates.
    pub fn solve_schur(&self, lambda: f64, f: &CMat) -> Result<CMat> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::input(format!("lambda must be > 0, got {lambda}")));
        }
        let n = self.dim();
        let t = &self.t;
        let diag: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        let mut z = CMat::zeros(n, n);
        let mut row = vec![ZERO; n];
        for i in 0..n {
            // row_i ← f_i + Σ_{k<i} conj(t_ki) z_k
            for j in 0..n {
                row[j] = f[(i, j)];
            }
            for k in 0..i {
                let tk = t[(k, i)].conj();
                if tk == ZERO {
                    continue;
                }
                for j in 0..n {
                    row[j] += tk * z[(k, j)];
                }
            }
            let mu = C64::new(lambda, 0.0) - diag[i].conj();
            for j in 0..n {
                let mut s = row[j];
                for k in 0..j {
                    s += z[(i, k)] * t[(k, j)];
                }
                let denom = mu - diag[j];
                if denom.norm() < SHIFT_FLOOR {
                    return Err(Error::Conditioning(format!(
                        "shifted spectrum |λ − conj(g_{i}) − g_{j}| = {:.3e} below {SHIFT_FLOOR:e}",
                        denom.norm()
                    )));
                }
                z[(i, j)] = s / denom;
            }
        }
        Ok(z)
    }
}

/// One-shot `λY − G†Y − YG = rhs`.
pub fn solve_sylvester(lambda: f64, g: &CMat, rhs: &CMat) -> Result<CMat> {
    SylvesterSolver::new(g)?.solve(lambda, rhs)
}
