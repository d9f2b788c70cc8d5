//! Truncated representations: Fock ladder algebra, Hermite-basis
//! potentials and the periodic-grid Laplacian.

mod fock;
mod grid;
mod potential;

pub use fock::{
    compress_product, default_buffer, derivative_op, family_band, ladder, position_op, FockBasis, Ladder,
    LadderOp, TruncationMode,
};
pub use grid::{fft_laplacian, fourier_multiplier_matrix, GridBasis, SpectralLaplacian};
pub use potential::{potential_op, PotentialQuadrature};
