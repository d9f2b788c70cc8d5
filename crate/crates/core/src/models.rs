//! Model library: the one-dimensional heavy-ion collision model with its
//! operator `C`, a damped oscillator and a quadratic pump.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{assemble_ladder, LindbladModel, Mode};
use crate::hilbert::{default_buffer, family_band, potential_op, FockBasis, LadderOp, PotentialQuadrature};
use crate::linops::{c, hermitian_part, identity, CMat};
use crate::quad::{integrate, GaussHermite};

/// Parameters of the heavy-ion model with `V(x) = ¼w²|x|^ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyIonParams {
    pub w: f64,
    pub alpha: f64,
    pub nu: f64,
    #[serde(default = "default_b1")]
    pub b1: f64,
}

fn default_b1() -> f64 {
    1.0
}

/// Recorded split `|V'| ≤ U₁ + U₂` with `U₁` supported in `|x| ≤ 1` and
/// `U₂ ≤ b₂(|x| + b₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialWitness {
    /// Integrability exponent with `U₁ ∈ L^β`; the one-dimensional threshold is `β > 1`.
    pub beta: f64,
    pub beta_threshold: f64,
    /// `‖U₁‖_β^β`
    pub u1_norm: f64,
    pub b2: f64,
    pub b3: f64,
}

impl HeavyIonParams {
    pub fn potential(&self) -> impl Fn(f64) -> f64 {
        let (w, nu) = (self.w, self.nu);
        move |x: f64| 0.25 * w * w * x.abs().powf(nu)
    }

    /// `b₆ = w²(|α| + α)`, so that `C = Σ L†L + b₆`.
    pub fn b6(&self) -> f64 {
        self.w * self.w * (self.alpha.abs() + self.alpha)
    }

    /// Check conditions (1)–(3) on the quadrature nodes of an `n`-state basis.
    pub fn validate(&self, n: usize) -> Result<PotentialWitness> {
        let fail = |condition: &str, detail: String| Error::Validation {
            condition: condition.into(),
            detail,
        };
        if !(self.w.is_finite() && self.w != 0.0) || !(self.alpha.is_finite() && self.alpha != 0.0) {
            return Err(fail("parameters", "w and alpha must be finite and non-zero".into()));
        }
        if !(self.b1 > 0.0) {
            return Err(fail("(2)", format!("b1 must be positive, got {}", self.b1)));
        }
        if !(self.nu > 0.0 && self.nu <= 2.0) {
            return Err(fail("(2)", format!("nu must lie in (0, 2], got {}", self.nu)));
        }
        let w2a2 = self.w * self.w * self.alpha * self.alpha;
        if w2a2 < 2.0 * (1.0 - 1e-12) {
            return Err(fail("(1)", format!("w^2 alpha^2 = {w2a2} < 2")));
        }
        let w2 = self.w * self.w;
        let v = self.potential();
        let nodes = GaussHermite::new(2 * n + 8).nodes;
        for &x in &nodes {
            let bound = 0.25 * w2 * (x * x + self.b1);
            if v(x).abs() > bound * (1.0 + 1e-12) {
                return Err(fail("(2)", format!("|V({x})| = {} exceeds w^2(x^2+b1)/4 = {bound}", v(x))));
            }
        }
        let (b2, b3) = (self.nu * w2 / 4.0, 1.0);
        let slope = |x: f64| self.nu * 0.25 * w2 * x.abs().powf(self.nu - 1.0);
        for &x in &nodes {
            if x.abs() > 1.0 && slope(x) > b2 * (x.abs() + b3) * (1.0 + 1e-12) {
                return Err(fail("(3)", format!("U2({x}) = {} exceeds b2(|x|+b3)", slope(x))));
            }
        }
        let beta = if self.nu < 1.0 {
            0.5 * (1.0 + 1.0 / (1.0 - self.nu))
        } else {
            2.0
        };
        // ∫_{|x|≤1} U₁^β = 2 (ν w²/4)^β / ((ν−1)β + 1)
        let u1_norm = if (self.nu - 1.0) * beta + 1.0 > 0.0 {
            let exact = 2.0 * b2.powf(beta) / ((self.nu - 1.0) * beta + 1.0);
            let numeric = 2.0 * integrate(&|x: f64| slope(x).powf(beta), 0.0, 1.0, 1e-10).unwrap_or(exact);
            if ((numeric - exact) / exact).abs() < 1e-3 || self.nu < 1.0 {
                exact
            } else {
                return Err(fail("(3)", format!("U1 norm quadrature mismatch {numeric} vs {exact}")));
            }
        } else {
            return Err(fail("(3)", "U1 is not in L^beta for any beta > 1".into()));
        };
        Ok(PotentialWitness {
            beta,
            beta_threshold: 1.0,
            u1_norm,
            b2,
            b3,
        })
    }
}

/// Heavy-ion model at one truncation together with its operator `C`.
#[derive(Debug, Clone)]
pub struct HeavyIonModel {
    pub params: HeavyIonParams,
    pub model: LindbladModel,
    /// `w²(−α²Δ + x² + |α|)` assembled from position and derivative.
    pub c: CMat,
    /// `Σ L†L + b₆`.
    pub c_from_loss: CMat,
    pub b6: f64,
    pub jump: LadderOp,
    pub witness: PotentialWitness,
}

/// `L = w(x + α∂)`.
pub fn heavy_ion_jump(params: &HeavyIonParams) -> LadderOp {
    (LadderOp::position() + LadderOp::derivative().scale(c(params.alpha))).scale(c(params.w))
}

/// `−Δ = ∂†∂`.
fn kinetic() -> LadderOp {
    let d = LadderOp::derivative();
    d.adjoint() * d
}

pub fn heavy_ion(params: HeavyIonParams, n: usize, buffer: Option<usize>, mode: Mode) -> Result<HeavyIonModel> {
    let witness = params.validate(n)?;
    let jump = heavy_ion_jump(&params);
    let x2 = LadderOp::position() * LadderOp::position();
    let band = family_band(&[jump.clone(), kinetic(), x2.clone()]);
    let basis = FockBasis::new(n, buffer.unwrap_or_else(|| default_buffer(band)))?;
    let quadrature = if params.nu == 2.0 {
        PotentialQuadrature::default_for(&basis)
    } else {
        PotentialQuadrature::SplitAtOrigin
    };
    let v = potential_op(params.potential(), &basis, quadrature)?;
    let h = hermitian_part(&(kinetic().truncate(n).scale(0.5) + v));
    let extension = jump.raise_width();
    let (lt, m) = crate::hilbert::compress_product(std::slice::from_ref(&jump), &basis, mode, extension)?;
    let model = crate::generator::assemble_with_loss(h, lt, m, crate::generator::Basis::Fock(basis), mode)?;
    let w2 = params.w * params.w;
    let c_op = (kinetic().scale(c(params.alpha * params.alpha)) + x2 + LadderOp::identity().scale(c(params.alpha.abs())))
        .scale(c(w2));
    let cmat = hermitian_part(&c_op.truncate(n));
    let b6 = params.b6();
    let c_from_loss = model.m() + identity(n).scale(b6);
    Ok(HeavyIonModel {
        params,
        model,
        c: cmat,
        c_from_loss,
        b6,
        jump,
        witness,
    })
}

/// Damped oscillator `H = ωa†a`, `L = √γ a`, with `C = M = γa†a`.
pub fn damped_oscillator(gamma: f64, omega: f64, n: usize, buffer: Option<usize>, mode: Mode) -> Result<(LindbladModel, CMat)> {
    if !(gamma > 0.0) || !(omega >= 0.0) {
        return Err(Error::input(format!("need gamma > 0 and omega >= 0, got {gamma}, {omega}")));
    }
    if n < 4 {
        return Err(Error::input(format!("damped oscillator needs N >= 4, got {n}")));
    }
    let basis = FockBasis::new(n, buffer.unwrap_or_else(|| default_buffer(1)))?;
    let h = LadderOp::number().scale(c(omega));
    let l = LadderOp::lower().scale(c(gamma.sqrt()));
    let model = assemble_ladder(&h, &[l], basis, mode)?;
    let cmat = model.m().clone();
    Ok((model, cmat))
}

/// Quadratic pump `H = 0`, `L = a†²`; absorbing truncation only.
pub fn quadratic_pump(n: usize, buffer: Option<usize>, mode: Mode) -> Result<LindbladModel> {
    if mode == Mode::Exact {
        return Err(Error::contract("the quadratic pump has no exact truncation; use absorbing mode"));
    }
    if n < 8 {
        return Err(Error::input(format!("quadratic pump needs N >= 8, got {n}")));
    }
    let basis = FockBasis::new(n, buffer.unwrap_or_else(|| default_buffer(2)))?;
    assemble_ladder(&LadderOp::zero(), &[LadderOp::raise() * LadderOp::raise()], basis, mode)
}

fn default_mode() -> Mode {
    Mode::Absorbing
}

/// Serializable model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    HeavyIon {
        w: f64,
        alpha: f64,
        nu: f64,
        #[serde(default = "default_b1")]
        b1: f64,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        buffer: Option<usize>,
        #[serde(default = "default_mode")]
        mode: Mode,
    },
    DampedOscillator {
        gamma: f64,
        #[serde(default)]
        omega: f64,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        buffer: Option<usize>,
        #[serde(default = "default_mode")]
        mode: Mode,
    },
    QuadraticPump {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        buffer: Option<usize>,
        #[serde(default = "default_mode")]
        mode: Mode,
    },
}

/// A model together with its certificate operator, if the family has one.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: LindbladModel,
    pub c: Option<CMat>,
}

impl ModelSpec {
    pub fn size(&self) -> usize {
        match self {
            ModelSpec::HeavyIon { n, .. } | ModelSpec::DampedOscillator { n, .. } | ModelSpec::QuadraticPump { n, .. } => *n,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            ModelSpec::HeavyIon { mode, .. }
            | ModelSpec::DampedOscillator { mode, .. }
            | ModelSpec::QuadraticPump { mode, .. } => *mode,
        }
    }

    /// Same family at truncation size `n`. An explicit buffer is kept.
    pub fn with_size(&self, size: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::HeavyIon { n, .. } | ModelSpec::DampedOscillator { n, .. } | ModelSpec::QuadraticPump { n, .. } => {
                *n = size
            }
        }
        out
    }

    pub fn with_mode(&self, new_mode: Mode) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::HeavyIon { mode, .. }
            | ModelSpec::DampedOscillator { mode, .. }
            | ModelSpec::QuadraticPump { mode, .. } => *mode = new_mode,
        }
        out
    }

    pub fn build(&self) -> Result<BuiltModel> {
        match *self {
            ModelSpec::HeavyIon {
                w,
                alpha,
                nu,
                b1,
                n,
                buffer,
                mode,
            } => {
                let hi = heavy_ion(HeavyIonParams { w, alpha, nu, b1 }, n, buffer, mode)?;
                Ok(BuiltModel {
                    model: hi.model,
                    c: Some(hi.c),
                })
            }
            ModelSpec::DampedOscillator {
                gamma,
                omega,
                n,
                buffer,
                mode,
            } => {
                let (model, cm) = damped_oscillator(gamma, omega, n, buffer, mode)?;
                Ok(BuiltModel { model, c: Some(cm) })
            }
            ModelSpec::QuadraticPump { n, buffer, mode } => Ok(BuiltModel {
                model: quadratic_pump(n, buffer, mode)?,
                c: None,
            }),
        }
    }
}
