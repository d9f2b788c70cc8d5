//! Lindblad models `(H, {L_l})` and the generator
//! `L(X) = XG + G†X + Σ L†XL` with `G = −iH − ½M`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hilbert::{compress_product, FockBasis, GridBasis, LadderOp};
use crate::linops::{
    hermitian_part, is_finite, is_hermitian, kron, max_abs, max_eig, min_eig, op_norm, CMat, C64, I,
};

pub use crate::hilbert::TruncationMode as Mode;

/// Largest dimension for which the explicit `dim² × dim²` superoperator is built.
pub const SUPEROPERATOR_MAX_DIM: usize = 24;

/// Residual tolerance of the truncated dissipation identity, relative to `1 + ‖M‖`.
pub const IDENTITY_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    Fock(FockBasis),
    Grid(GridBasis),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Fock(b) => b.size,
            Basis::Grid(g) => g.len(),
        }
    }

    /// Number of leading basis states on which form inequalities are evaluated.
    pub fn interior_dim(&self) -> usize {
        match self {
            Basis::Fock(b) => b.interior_dim(),
            Basis::Grid(g) => g.len(),
        }
    }

    pub fn buffer(&self) -> usize {
        match self {
            Basis::Fock(b) => b.buffer,
            Basis::Grid(_) => 0,
        }
    }
}

/// Validated Lindblad data at a fixed truncation.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    h: CMat,
    ls: Vec<CMat>,
    m: CMat,
    g: CMat,
    basis: Basis,
    mode: Mode,
}

impl LindbladModel {
    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn jump_ops(&self) -> &[CMat] {
        &self.ls
    }

    /// Loss operator `M`, in absorbing mode the exact compression of `Σ L†L`.
    pub fn m(&self) -> &CMat {
        &self.m
    }

    pub fn g(&self) -> &CMat {
        &self.g
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `Σ L†XL` on the truncated space.
    pub fn gain(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(x.nrows(), x.ncols());
        for l in &self.ls {
            out += l.adjoint() * x * l;
        }
        out
    }

    /// `G + G† + Σ L†L`; zero in exact mode, `⪯ 0` in absorbing mode.
    pub fn dissipation_residual(&self) -> CMat {
        hermitian_part(&(&self.g + self.g.adjoint() + self.gain(&CMat::identity(self.dim(), self.dim()))))
    }

    /// SHA-256 over the mode and the raw matrix entries.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(match self.mode {
            Mode::Exact => b"exact".as_slice(),
            Mode::Absorbing => b"absorbing".as_slice(),
        });
        let mut feed = |a: &CMat| {
            hasher.update((a.nrows() as u64).to_le_bytes());
            for z in a.iter() {
                hasher.update(z.re.to_le_bytes());
                hasher.update(z.im.to_le_bytes());
            }
        };
        feed(&self.h);
        feed(&self.m);
        for l in &self.ls {
            feed(l);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// If `G` is diagonal and every `L_l` has a single non-zero diagonal
    /// offset, the generator maps each diagonal band `X_{i,i+d}` into itself.
    /// Returns the offsets `row − col` of the jump operators in that case.
    pub fn phase_offsets(&self) -> Option<Vec<i64>> {
        let n = self.dim() as i64;
        let scale = 1.0 + max_abs(&self.g);
        let tol = 1e-10 * scale;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if i != j && self.g[(i, j)].norm() > tol {
                    return None;
                }
            }
        }
        let mut offsets = Vec::with_capacity(self.ls.len());
        for l in &self.ls {
            let ltol = 1e-12 * (1.0 + max_abs(l));
            let mut found: Option<i64> = None;
            for d in -(n - 1)..n {
                let band_nonzero = (0..n).any(|col| {
                    let row = col + d;
                    row >= 0 && row < n && l[(row as usize, col as usize)].norm() > ltol
                });
                if band_nonzero {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(d);
                }
            }
            offsets.push(found.unwrap_or(0));
        }
        Some(offsets)
    }
}

fn check_dims(h: &CMat, ls: &[CMat], dim: usize) -> Result<()> {
    crate::linops::require_square(h, "Hamiltonian")?;
    if h.nrows() != dim {
        return Err(Error::input(format!(
            "Hamiltonian has dim {} but basis has dim {dim}",
            h.nrows()
        )));
    }
    for (idx, l) in ls.iter().enumerate() {
        if l.shape() != h.shape() {
            return Err(Error::input(format!(
                "jump operator {idx} has shape {:?}, expected {:?}",
                l.shape(),
                h.shape()
            )));
        }
        if !is_finite(l) {
            return Err(Error::input(format!("jump operator {idx} has non-finite entries")));
        }
    }
    Ok(())
}

/// Assemble a model with `M = Σ L†L` computed from the given matrices.
pub fn assemble(h: CMat, ls: Vec<CMat>, basis: Basis, mode: Mode) -> Result<LindbladModel> {
    check_dims(&h, &ls, basis.dim())?;
    let dim = basis.dim();
    let mut m = CMat::zeros(dim, dim);
    for l in &ls {
        m += l.adjoint() * l;
    }
    assemble_with_loss(h, ls, hermitian_part(&m), basis, mode)
}

/// Assemble a model with an explicitly supplied loss operator `M`, e.g. the
/// exact compression from [`compress_product`].
pub fn assemble_with_loss(h: CMat, ls: Vec<CMat>, m: CMat, basis: Basis, mode: Mode) -> Result<LindbladModel> {
    check_dims(&h, &ls, basis.dim())?;
    if !is_finite(&h) || !is_hermitian(&h) {
        return Err(Error::contract("Hamiltonian must be finite and Hermitian"));
    }
    if m.shape() != h.shape() || !is_hermitian(&m) {
        return Err(Error::contract("loss operator M must be Hermitian with the Hamiltonian's shape"));
    }
    let h = hermitian_part(&h);
    let m = hermitian_part(&m);
    let m_norm = op_norm(&m);
    if min_eig(&m)? < -1e-12 * (1.0 + m_norm) {
        return Err(Error::contract("loss operator M is not positive semidefinite"));
    }
    let g = h.map(|z| -I * z) - m.scale(0.5);
    let model = LindbladModel {
        h,
        ls,
        m,
        g,
        basis,
        mode,
    };
    let residual = model.dissipation_residual();
    let tol = IDENTITY_TOL * (1.0 + m_norm);
    match mode {
        Mode::Exact => {
            let r = op_norm(&residual);
            if r > tol {
                return Err(Error::contract(format!(
                    "exact mode requires G + G† + Σ L†L = 0; residual norm {r:.3e} exceeds {tol:.3e}"
                )));
            }
        }
        Mode::Absorbing => {
            let top = max_eig(&residual)?;
            if top > tol {
                return Err(Error::contract(format!(
                    "absorbing mode requires G + G† + Σ L†L ⪯ 0; top eigenvalue {top:.3e}"
                )));
            }
        }
    }
    Ok(model)
}

/// Build a Fock-basis model from ladder-algebra data. `M` is the exact
/// compression of `Σ L†L`; the jump operators are compressed to the basis.
pub fn assemble_ladder(h: &LadderOp, ls: &[LadderOp], basis: FockBasis, mode: Mode) -> Result<LindbladModel> {
    let extension = ls.iter().map(LadderOp::raise_width).max().unwrap_or(0);
    let (lt, m) = compress_product(ls, &basis, mode, extension)?;
    assemble_with_loss(h.truncate(basis.size), lt, m, Basis::Fock(basis), mode)
}

/// Heisenberg-picture generator `L(X) = XG + G†X + Σ L†XL`.
pub fn lindblad_apply(model: &LindbladModel, x: &CMat) -> Result<CMat> {
    if x.shape() != model.h.shape() {
        return Err(Error::input(format!(
            "operator shape {:?} does not match model dim {}",
            x.shape(),
            model.dim()
        )));
    }
    Ok(x * &model.g + model.g.adjoint() * x + model.gain(x))
}

/// Schrödinger-picture generator `L*(ρ) = Gρ + ρG† + Σ LρL†`, the trace dual
/// of [`lindblad_apply`].
pub fn lindblad_preadjoint(model: &LindbladModel, rho: &CMat) -> Result<CMat> {
    if rho.shape() != model.h.shape() {
        return Err(Error::input("density matrix shape does not match model"));
    }
    let mut out = &model.g * rho + rho * model.g.adjoint();
    for l in &model.ls {
        out += l * rho * l.adjoint();
    }
    Ok(out)
}

/// Explicit matrix of `L` acting on column-major `vec(X)`.
pub fn superoperator_matrix(model: &LindbladModel) -> Result<CMat> {
    let n = model.dim();
    if n > SUPEROPERATOR_MAX_DIM {
        return Err(Error::input(format!(
            "superoperator matrix limited to dim <= {SUPEROPERATOR_MAX_DIM}, got {n}"
        )));
    }
    let id = CMat::identity(n, n);
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut s = kron(&model.g.transpose(), &id) + kron(&id, &model.g.adjoint());
    for l in &model.ls {
        s += kron(&l.transpose(), &l.adjoint());
    }
    Ok(s)
}

/// Explicit matrix of the pre-adjoint `L*`, built independently of
/// [`superoperator_matrix`].
pub fn preadjoint_matrix(model: &LindbladModel) -> Result<CMat> {
    let n = model.dim();
    if n > SUPEROPERATOR_MAX_DIM {
        return Err(Error::input(format!(
            "superoperator matrix limited to dim <= {SUPEROPERATOR_MAX_DIM}, got {n}"
        )));
    }
    let id = CMat::identity(n, n);
    let gh = model.g.adjoint();
    let mut s = kron(&id, &model.g) + kron(&gh.transpose(), &id);
    for l in &model.ls {
        s += kron(&l.adjoint().transpose(), l);
    }
    Ok(s)
}

/// `Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
