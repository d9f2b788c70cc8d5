use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{c, CMat, C64, ZERO};

/// Truncated Fock (Hermite) basis of `size` states. The last `buffer`
/// indices are excluded when form inequalities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasis {
    pub size: usize,
    pub buffer: usize,
}

impl FockBasis {
    pub fn new(size: usize, buffer: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::input("Fock basis size must be positive"));
        }
        if buffer >= size {
            return Err(Error::input(format!(
                "buffer {buffer} must be smaller than basis size {size}"
            )));
        }
        Ok(Self { size, buffer })
    }

    /// Default buffer `max(4, band + 2)` for operators of the given band width.
    pub fn with_default_buffer(size: usize, band: usize) -> Result<Self> {
        Self::new(size, default_buffer(band))
    }

    /// Number of interior states, indices `0..interior_dim()`.
    pub fn interior_dim(&self) -> usize {
        self.size - self.buffer
    }

    /// Diagonal 0/1 interior projector as a full `size×size` matrix.
    pub fn interior_projector(&self) -> CMat {
        let k = self.interior_dim();
        CMat::from_fn(self.size, self.size, |i, j| if i == j && i < k { c(1.0) } else { ZERO })
    }

    /// Compression `Π A Π` restricted to the interior subspace.
    pub fn compress(&self, a: &CMat) -> CMat {
        crate::linops::leading_block(a, self.interior_dim())
    }
}

pub fn default_buffer(band: usize) -> usize {
    4.max(band + 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Lower,
    Raise,
}

/// A polynomial in `a`, `a†` stored as a sum of words. Matrix elements are
/// evaluated on the untruncated Fock space, so any compression of the
/// operator is exact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadderOp {
    terms: Vec<(C64, Vec<Ladder>)>,
}

impl LadderOp {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            terms: vec![(value, Vec::new())],
        }
    }

    pub fn identity() -> Self {
        Self::scalar(c(1.0))
    }

    pub fn lower() -> Self {
        Self {
            terms: vec![(c(1.0), vec![Ladder::Lower])],
        }
    }

    pub fn raise() -> Self {
        Self {
            terms: vec![(c(1.0), vec![Ladder::Raise])],
        }
    }

    /// `a†a`.
    pub fn number() -> Self {
        Self::raise() * Self::lower()
    }

    /// `x = (a + a†)/√2`.
    pub fn position() -> Self {
        (Self::lower() + Self::raise()).scale(c(std::f64::consts::FRAC_1_SQRT_2))
    }

    /// `∂ = (a − a†)/√2`.
    pub fn derivative() -> Self {
        (Self::lower() - Self::raise()).scale(c(std::f64::consts::FRAC_1_SQRT_2))
    }

    pub fn scale(mut self, s: C64) -> Self {
        for (coef, _) in &mut self.terms {
            *coef *= s;
        }
        self
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(coef, word)| {
                    let flipped = word
                        .iter()
                        .rev()
                        .map(|l| match l {
                            Ladder::Lower => Ladder::Raise,
                            Ladder::Raise => Ladder::Lower,
                        })
                        .collect();
                    (coef.conj(), flipped)
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(coef, _)| *coef == ZERO)
    }

    fn shifts(&self) -> impl Iterator<Item = i64> + '_ {
        self.terms.iter().filter(|(coef, _)| *coef != ZERO).map(|(_, w)| {
            w.iter()
                .map(|l| match l {
                    Ladder::Raise => 1,
                    Ladder::Lower => -1,
                })
                .sum()
        })
    }

    /// Largest `|k − n|` over non-zero matrix elements `⟨k|L|n⟩`.
    pub fn band_width(&self) -> usize {
        self.shifts().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// How far above its column a non-zero element can sit.
    pub fn raise_width(&self) -> usize {
        self.shifts().map(|s| s.max(0) as usize).max().unwrap_or(0)
    }

    /// Apply a word to `|n⟩` on the full Fock space.
    fn apply_word(word: &[Ladder], n: usize) -> Option<(f64, usize)> {
        let mut amp = 1.0;
        let mut state = n;
        for l in word.iter().rev() {
            match l {
                Ladder::Lower => {
                    if state == 0 {
                        return None;
                    }
                    amp *= (state as f64).sqrt();
                    state -= 1;
                }
                Ladder::Raise => {
                    state += 1;
                    amp *= (state as f64).sqrt();
                }
            }
        }
        Some((amp, state))
    }

    /// Exact matrix elements `⟨k|L|n⟩` for `k < rows`, `n < cols`.
    pub fn matrix(&self, rows: usize, cols: usize) -> CMat {
        let mut out = CMat::zeros(rows, cols);
        for n in 0..cols {
            for (coef, word) in &self.terms {
                if let Some((amp, k)) = Self::apply_word(word, n) {
                    if k < rows {
                        out[(k, n)] += coef * amp;
                    }
                }
            }
        }
        out
    }

    /// Square compression onto the first `size` states.
    pub fn truncate(&self, size: usize) -> CMat {
        self.matrix(size, size)
    }
}

impl Add for LadderOp {
    type Output = LadderOp;
    fn add(mut self, rhs: LadderOp) -> LadderOp {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for LadderOp {
    type Output = LadderOp;
    fn sub(self, rhs: LadderOp) -> LadderOp {
        self + rhs.scale(c(-1.0))
    }
}

impl Neg for LadderOp {
    type Output = LadderOp;
    fn neg(self) -> LadderOp {
        self.scale(c(-1.0))
    }
}

impl Mul for LadderOp {
    type Output = LadderOp;
    fn mul(self, rhs: LadderOp) -> LadderOp {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ca, wa) in &self.terms {
            for (cb, wb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                terms.push((ca * cb, w));
            }
        }
        LadderOp { terms }
    }
}

/// Annihilation operator `a` with `a[n−1, n] = √n`.
pub fn ladder(basis: &FockBasis) -> Result<CMat> {
    if basis.size < 2 {
        return Err(Error::input("ladder operator needs at least two states"));
    }
    Ok(LadderOp::lower().truncate(basis.size))
}

pub fn position_op(basis: &FockBasis) -> Result<CMat> {
    ladder(basis)?;
    Ok(LadderOp::position().truncate(basis.size))
}

pub fn derivative_op(basis: &FockBasis) -> Result<CMat> {
    ladder(basis)?;
    Ok(LadderOp::derivative().truncate(basis.size))
}

/// How dissipators are compressed to the truncated space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// `G + G† + Σ L†L = 0` holds exactly on the truncated space.
    Exact,
    /// Loss `M` keeps full column norms while the gain channel is restricted;
    /// the truncated semigroup is sub-Markovian.
    Absorbing,
}

/// Truncated jump operators `Π L Π` and the exact compression
/// `M = Π (Σ L†L) Π`, computed on a space extended by `extension` states.
///
/// Both modes return the same matrices; the mode only records which
/// identity the caller will hold the pair to.
pub fn compress_product(
    ops: &[LadderOp],
    basis: &FockBasis,
    _mode: TruncationMode,
    extension: usize,
) -> Result<(Vec<CMat>, CMat)> {
    let n = basis.size;
    let mut m = CMat::zeros(n, n);
    let mut truncated = Vec::with_capacity(ops.len());
    for (idx, op) in ops.iter().enumerate() {
        let raise = op.raise_width();
        if raise > extension {
            return Err(Error::input(format!(
                "jump operator {idx} raises by {raise} states but only {extension} extension states are available"
            )));
        }
        let extended = op.matrix(n + raise, n);
        m += extended.adjoint() * &extended;
        truncated.push(op.truncate(n));
    }
    Ok((truncated, crate::linops::hermitian_part(&m)))
}

/// Band width of a family of operators.
pub fn family_band(ops: &[LadderOp]) -> usize {
    ops.iter().map(LadderOp::band_width).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{diag_real, identity, max_abs};

    fn basis(n: usize, m: usize) -> FockBasis {
        FockBasis::new(n, m).unwrap()
    }

    #[test]
    fn ladder_two_states() {
        let a = ladder(&basis(2, 0)).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[ZERO, c(1.0), ZERO, ZERO]);
        assert_eq!(a, expect);
        assert!(ladder(&basis(1, 0)).is_err());
    }

    #[test]
    fn number_operator_diagonal() {
        let b = basis(6, 1);
        let a = ladder(&b).unwrap();
        let n = a.adjoint() * &a;
        assert!((n - diag_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])).norm() < 1e-14);
        assert!((LadderOp::number().truncate(6) - diag_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])).norm() < 1e-14);
    }

    #[test]
    fn commutator_on_interior() {
        // [a, a†] = I fails only in the last row/column of a truncation.
        let b = basis(8, 1);
        let a = ladder(&b).unwrap();
        let comm = &a * a.adjoint() - a.adjoint() * &a - identity(8);
        assert!(max_abs(&b.compress(&comm)) < 1e-12);
        assert!(comm[(7, 7)].norm() > 1.0);
    }

    #[test]
    fn position_derivative_identities() {
        let b = basis(2, 0);
        let x = position_op(&b).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x - CMat::from_row_slice(2, 2, &[ZERO, c(h), c(h), ZERO])).norm() < 1e-15);

        let b = basis(10, 2);
        let x = position_op(&b).unwrap();
        let d = derivative_op(&b).unwrap();
        let a = ladder(&b).unwrap();
        assert!((&x + &d - a.scale(std::f64::consts::SQRT_2)).norm() < 1e-14);
        assert!(crate::linops::is_hermitian(&x));
        assert!(max_abs(&(&d + d.adjoint())) < 1e-15);
        // [∂, x] = I on the interior
        let comm = &d * &x - &x * &d - identity(10);
        assert!(max_abs(&b.compress(&comm)) < 1e-12);
    }

    #[test]
    fn kinetic_term_matches_ladder_form() {
        // −∂² = ∂†∂ = ½(2a†a + 1 − a² − a†²) on the interior.
        let b = basis(12, 2);
        let d = derivative_op(&b).unwrap();
        let a = ladder(&b).unwrap();
        let n = a.adjoint() * &a;
        let lhs = d.adjoint() * &d;
        let rhs = (n.scale(2.0) + identity(12) - &a * &a - a.adjoint() * a.adjoint()).scale(0.5);
        assert!(max_abs(&b.compress(&(&lhs - &rhs))) < 1e-12);
        assert!(max_abs(&b.compress(&(&lhs + &d * &d))) < 1e-12);
    }

    #[test]
    fn compress_lowering_is_number_operator() {
        let b = basis(6, 2);
        let (ls, m) = compress_product(&[LadderOp::lower()], &b, TruncationMode::Exact, 2).unwrap();
        assert!((m - diag_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])).norm() < 1e-14);
        assert_eq!(ls[0], ladder(&b).unwrap());
    }

    #[test]
    fn compress_double_raise() {
        let b = basis(7, 3);
        let op = LadderOp::raise() * LadderOp::raise();
        let (_, m) = compress_product(&[op.clone()], &b, TruncationMode::Absorbing, 2).unwrap();
        let expect: Vec<f64> = (0..7).map(|n| ((n + 1) * (n + 2)) as f64).collect();
        assert!((m - diag_real(&expect)).norm() < 1e-12);
        assert!(matches!(
            compress_product(&[op], &b, TruncationMode::Absorbing, 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn compress_zero_operator() {
        let b = basis(5, 1);
        let (_, m) = compress_product(&[LadderOp::zero()], &b, TruncationMode::Exact, 0).unwrap();
        assert_eq!(max_abs(&m), 0.0);
    }

    #[test]
    fn compression_matches_normal_ordered_band() {
        // Analytic L†L for L = μa + νa†:
        //   |μ|² a†a + |ν|² (a†a + 1) + conj(μ)ν a†² + conj(ν)μ a².
        let n = 9;
        let b = basis(n, 2);
        let mu = C64::new(0.7, -0.2);
        let nu = C64::new(-0.4, 0.5);
        let op = LadderOp::lower().scale(mu) + LadderOp::raise().scale(nu);
        let (_, m) = compress_product(&[op], &b, TruncationMode::Absorbing, 1).unwrap();
        let num = LadderOp::number().truncate(n);
        let a2 = (LadderOp::lower() * LadderOp::lower()).truncate(n);
        let ad2 = (LadderOp::raise() * LadderOp::raise()).truncate(n);
        let expect = num.scale(mu.norm_sqr())
            + (num.clone() + identity(n)).scale(nu.norm_sqr())
            + ad2 * (mu.conj() * nu)
            + a2 * (nu.conj() * mu);
        assert!(max_abs(&(m - expect)) < 1e-12);

        for op in [LadderOp::lower(), LadderOp::raise(), LadderOp::raise() * LadderOp::raise()] {
            let (_, m) = compress_product(&[op.clone()], &b, TruncationMode::Absorbing, 2).unwrap();
            let exact = (op.adjoint() * op).truncate(n);
            assert!(max_abs(&(m - exact)) < 1e-12);
        }
    }

    #[test]
    fn buffer_must_fit() {
        assert!(FockBasis::new(4, 4).is_err());
        assert_eq!(FockBasis::with_default_buffer(16, 1).unwrap().buffer, 4);
        assert_eq!(FockBasis::with_default_buffer(16, 3).unwrap().buffer, 5);
    }
}
