#![allow(dead_code)]

use qds_core::generator::{assemble, Basis, Mode};
use qds_core::hilbert::FockBasis;
use qds_core::linops::{CMat, C64};
use qds_core::LindbladModel;
use rand::Rng;

pub fn random_cmat(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    let a = random_cmat(rng, n, scale);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_psd(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    let a = random_cmat(rng, n, scale);
    &a * a.adjoint()
}

/// Exact-mode model with a random Hamiltonian and `jumps` random jump operators.
pub fn random_model(rng: &mut impl Rng, n: usize, jumps: usize) -> LindbladModel {
    let h = random_hermitian(rng, n, 1.0);
    let ls = (0..jumps).map(|_| random_cmat(rng, n, 0.7)).collect();
    let basis = Basis::Fock(FockBasis::new(n, 1).unwrap());
    assemble(h, ls, basis, Mode::Exact).unwrap()
}

/// Model from a flat list of reals, for proptest strategies.
pub fn model_from_values(n: usize, values: &[f64]) -> LindbladModel {
    let take = |offset: usize| CMat::from_fn(n, n, |i, j| C64::new(values[offset + 2 * (i * n + j)], values[offset + 2 * (i * n + j) + 1]));
    let a = take(0);
    let h = (&a + a.adjoint()).scale(0.5);
    let l = take(2 * n * n);
    let basis = Basis::Fock(FockBasis::new(n, 1).unwrap());
    assemble(h, vec![l], basis, Mode::Exact).unwrap()
}

pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
