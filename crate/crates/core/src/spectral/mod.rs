//! Fourier-space representation of periodic vector fields on (0, 2π)³.

mod fft;
mod field;
mod grid;
mod ops;
pub mod random;

pub use fft::{FftPlan, PhysicalField};
pub use field::{ScalarField, SpectralField};
pub use grid::{Grid, DEFAULT_DEALIAS_FRACTION};
pub use ops::{
    curl, divergence, energy, gradient, hs_norm, laplacian, leray_project, leray_project_in_place,
    partial, project_ball, project_pn, shell_spectrum, NormOrder,
};
pub use rustfft::num_complex::Complex64;
