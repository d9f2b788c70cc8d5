use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{c, CMat, C64};

/// Uniform periodic grid on `[-R, R)^n`, `n ∈ {1, 2}`, with `points` nodes
/// per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBasis {
    pub points: usize,
    pub half_length: f64,
    pub dim: usize,
}

impl GridBasis {
    pub fn new(points: usize, half_length: f64, dim: usize) -> Result<Self> {
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::input(format!("grid points must be a power of two >= 2, got {points}")));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::input(format!("box half-length must be positive, got {half_length}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::input(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self {
            points,
            half_length,
            dim,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    /// Total number of grid nodes, `points^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis nodes `x_j = −R + j h`.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|j| -self.half_length + j as f64 * h).collect()
    }

    /// Discrete momenta in FFT order.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = PI / self.half_length;
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk })
            .collect()
    }

    /// Node coordinates, row-major over axes (last axis fastest).
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let axis = self.axis();
        match self.dim {
            1 => axis.iter().map(|&x| vec![x]).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for &x in &axis {
                    for &y in &axis {
                        out.push(vec![x, y]);
                    }
                }
                out
            }
        }
    }

    /// `|k|²` for every Fourier mode, same ordering as [`GridBasis::nodes`].
    pub fn momentum_squared(&self) -> Vec<f64> {
        let k = self.momenta();
        match self.dim {
            1 => k.iter().map(|v| v * v).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for kx in &k {
                    for ky in &k {
                        out.push(kx * kx + ky * ky);
                    }
                }
                out
            }
        }
    }

    /// Sampled `L²` norm squared, `h^n Σ |f|²`.
    pub fn l2_norm_sq(&self, samples: &[f64]) -> f64 {
        self.spacing().powi(self.dim as i32) * samples.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Matrix-free `Δ` via forward and inverse FFT.
pub struct SpectralLaplacian {
    basis: GridBasis,
    symbol: Vec<f64>,
}

impl SpectralLaplacian {
    pub fn new(basis: GridBasis) -> Self {
        let symbol = basis.momentum_squared().into_iter().map(|k2| -k2).collect();
        Self { basis, symbol }
    }

    /// Eigenvalue `−|k|²` of each Fourier mode.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &[C64]) -> Result<Vec<C64>> {
        self.apply_multiplier(f, |s| s)
    }

    /// Apply the Fourier multiplier `m(−|k|²)`.
    pub fn apply_multiplier(&self, f: &[C64], m: impl Fn(f64) -> f64) -> Result<Vec<C64>> {
        if f.len() != self.basis.len() {
            return Err(Error::input(format!(
                "grid function has {} samples, grid has {}",
                f.len(),
                self.basis.len()
            )));
        }
        let mut buf = f.to_vec();
        fft_nd(&mut buf, self.basis.points, self.basis.dim, false);
        for (v, s) in buf.iter_mut().zip(&self.symbol) {
            *v *= m(*s);
        }
        fft_nd(&mut buf, self.basis.points, self.basis.dim, true);
        let scale = 1.0 / self.basis.len() as f64;
        Ok(buf.into_iter().map(|v| v * scale).collect())
    }
}

fn fft_nd(buf: &mut [C64], points: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(points)
    } else {
        planner.plan_fft_forward(points)
    };
    // last axis: contiguous rows
    for row in buf.chunks_mut(points) {
        fft.process(row);
    }
    if dim == 2 {
        let mut column = vec![C64::new(0.0, 0.0); points];
        for j in 0..points {
            for i in 0..points {
                column[i] = buf[i * points + j];
            }
            fft.process(&mut column);
            for i in 0..points {
                buf[i * points + j] = column[i];
            }
        }
    }
}

/// Dense real matrix of the Fourier multiplier with symbol
/// `m(−|k|²)`. The matrix is circulant (block-circulant in 2-D) and
/// symmetric whenever `m` is real.
pub fn fourier_multiplier_matrix(basis: &GridBasis, m: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = basis.len();
    let lap = SpectralLaplacian::new(*basis);
    let mut kernel: Vec<C64> = lap.symbol.iter().map(|s| c(m(*s))).collect();
    fft_nd(&mut kernel, basis.points, basis.dim, true);
    let scale = 1.0 / n as f64;
    let kernel: Vec<f64> = kernel.iter().map(|v| v.re * scale).collect();
    let p = basis.points;
    match basis.dim {
        1 => DMatrix::from_fn(n, n, |j, l| kernel[(j + p - l) % p]),
        _ => DMatrix::from_fn(n, n, |j, l| {
            let (j1, j2) = (j / p, j % p);
            let (l1, l2) = (l / p, l % p);
            kernel[((j1 + p - l1) % p) * p + (j2 + p - l2) % p]
        }),
    }
}

/// Dense periodic Laplacian. Negative semidefinite with eigenvalues `−|k|²`.
pub fn fft_laplacian(basis: &GridBasis) -> CMat {
    let real = fourier_multiplier_matrix(basis, |s| s);
    let sym = (&real + real.transpose()) * 0.5;
    sym.map(c)
}
