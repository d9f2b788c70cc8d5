//! Dense complex linear algebra used by every other module.
//!
//! Matrices are plain [`nalgebra::DMatrix`] values over `Complex64`; the
//! functions here add the checks and spectral utilities the certificates
//! rely on (Hermitian eigenvalues, spectral calculus, exponentials and the
//! Sylvester solves that realise the resolvent maps).

mod expm;
mod sylvester;

pub use expm::expm;
pub use sylvester::{solve_sylvester, SylvesterSolver};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex double-precision scalar.
pub type C64 = Complex64;
/// Square dense complex matrix; every truncated operator lives in one.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

/// Relative tolerance for the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hermiticity defect measured against the relative flag tolerance.
pub fn is_hermitian(a: &CMat) -> bool {
    if !a.is_square() {
        return false;
    }
    let defect = max_abs(&(a - a.adjoint()));
    defect <= HERMITIAN_TOL * (1.0 + max_abs(a))
}

/// `(A + A†)/2`, used to strip rounding asymmetry from matrices that are
/// Hermitian by construction.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn require_square(a: &CMat, what: &str) -> Result<()> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::input(format!(
            "{what} must be square with dim >= 1, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn require_hermitian(a: &CMat, what: &str) -> Result<()> {
    require_square(a, what)?;
    if !is_hermitian(a) {
        return Err(Error::contract(format!(
            "{what} is not Hermitian (defect {:.3e})",
            max_abs(&(a - a.adjoint()))
        )));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl HermitianSpectrum {
    /// Rebuild `V f(Λ) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMat {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * v.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

pub fn hermitian_spectrum(a: &CMat) -> Result<HermitianSpectrum> {
    require_hermitian(a, "matrix")?;
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = a.nrows();
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (ascending); cheaper than [`hermitian_spectrum`].
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    require_hermitian(a, "matrix")?;
    let mut vals: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

pub fn min_eig(a: &CMat) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?[0])
}

pub fn max_eig(a: &CMat) -> Result<f64> {
    Ok(*hermitian_eigenvalues(a)?.last().expect("non-empty"))
}

/// Spectral norm `‖A‖₂`.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let top = hermitian_part(&gram)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v));
    top.max(0.0).sqrt()
}

/// Norm of a Hermitian matrix, `max |λ|`.
pub fn hermitian_norm(a: &CMat) -> f64 {
    hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
}

fn psd_floor(spectrum: &HermitianSpectrum) -> f64 {
    let scale = spectrum.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    -HERMITIAN_TOL * scale
}

/// Bounded regularisation `C(I + εC)⁻¹` of a positive operator.
pub fn regularize(cop: &CMat, eps: f64) -> Result<CMat> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::input(format!("eps must be >= 0, got {eps}")));
    }
    let spectrum = hermitian_spectrum(cop)?;
    if spectrum.min() < psd_floor(&spectrum) {
        return Err(Error::input(format!(
            "C is not positive semidefinite (min eigenvalue {:.3e})",
            spectrum.min()
        )));
    }
    Ok(spectrum.apply_fn(|lam| lam / (1.0 + eps * lam)))
}

/// `A^t` for a positive semidefinite `A` and `t ∈ [0, 1]`.
pub fn frac_power(a: &CMat, t: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::input(format!("exponent must lie in [0,1], got {t}")));
    }
    let spectrum = hermitian_spectrum(a)?;
    if spectrum.min() < psd_floor(&spectrum) {
        return Err(Error::input(format!(
            "matrix has negative eigenvalue {:.3e}",
            spectrum.min()
        )));
    }
    Ok(spectrum.apply_fn(|lam| {
        let lam = lam.max(0.0);
        if t == 0.0 {
            1.0
        } else {
            lam.powf(t)
        }
    }))
}

/// `⟨u, A u⟩`, real part (A Hermitian in every caller).
pub fn expectation(a: &CMat, u: &CVec) -> f64 {
    u.dotc(&(a * u)).re
}

/// Top-left `k×k` block: the compression onto the first `k` basis vectors.
pub fn leading_block(a: &CMat, k: usize) -> CMat {
    a.view((0, 0), (k, k)).into_owned()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking vectorisation.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_iterator(a.len(), a.iter().copied())
}

pub fn unvec(v: &CVec, n: usize) -> CMat {
    CMat::from_iterator(n, n, v.iter().copied())
}
