use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{ScalarField, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Real samples of a 3-component field on the uniform grid `x = 2π i / n`,
/// stored in the same lexicographic order as the spectral lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub n: usize,
    pub comps: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn zeros(n: usize) -> Self {
        let len = n * n * n;
        PhysicalField {
            n,
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    /// Sample point coordinates for flat index `idx`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        [
            (idx / (n * n)) as f64 * h,
            ((idx / n) % n) as f64 * h,
            (idx % n) as f64 * h,
        ]
    }

    /// Volume-normalized quadrature `(2π)^{-3} ∫ ½|w|² dx` by the grid mean.
    pub fn mean_kinetic_energy(&self) -> f64 {
        let len = (self.n * self.n * self.n) as f64;
        let s: f64 = (0..self.comps[0].len())
            .map(|i| {
                self.comps[0][i].powi(2) + self.comps[1][i].powi(2) + self.comps[2][i].powi(2)
            })
            .sum();
        0.5 * s / len
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.comps[0].len())
            .map(|i| {
                (self.comps[0][i].powi(2) + self.comps[1][i].powi(2) + self.comps[2][i].powi(2))
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Planned 3D discrete Fourier transform on an `n³` lattice.
///
/// `inverse` evaluates `Σ_k ŵ(k) e^{ik·x}` (unnormalized) and `forward`
/// evaluates `n^{-3} Σ_x w(x) e^{-ik·x}`, so the pair realizes the Fourier
/// series exactly and discrete Parseval reads `mean(|w|²) = Σ |ŵ|²`.
#[derive(Clone)]
pub struct FftPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("n", &self.n).finish()
    }
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPlan {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn for_grid(grid: Grid) -> Self {
        Self::new(grid.n())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(buf.len(), n2 * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];

        // axis 3 is contiguous
        plan.process_with_scratch(buf, &mut scratch);

        // axis 2: transpose each n×n slab
        for slab in buf.chunks_exact_mut(n2) {
            let t = &mut tmp[..n2];
            transpose(slab, t, n, n);
            plan.process_with_scratch(t, &mut scratch);
            transpose(t, slab, n, n);
        }

        // axis 1: view as n × n² and transpose
        transpose(buf, &mut tmp, n, n2);
        plan.process_with_scratch(&mut tmp, &mut scratch);
        transpose(&tmp, buf, n2, n);
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.fwd);
        let s = 1.0 / (self.n * self.n * self.n) as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inv);
    }

    pub fn scalar_to_physical(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn scalar_from_physical(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn to_physical(&self, f: &SpectralField) -> Result<PhysicalField> {
        self.check(f.grid())?;
        let comps = [0, 1, 2].map(|c| self.scalar_to_physical(f.component(c)));
        Ok(PhysicalField { n: self.n, comps })
    }

    /// Inverse of [`to_physical`](Self::to_physical). The mean and the unpaired
    /// Nyquist planes of the input are discarded.
    pub fn from_physical(&self, grid: Grid, p: &PhysicalField) -> Result<SpectralField> {
        self.check(grid)?;
        if p.n != self.n {
            return Err(Error::GridMismatch(format!(
                "physical samples on n = {}, transform on n = {}",
                p.n, self.n
            )));
        }
        for c in &p.comps {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    actual: c.len(),
                });
            }
        }
        let comps = [0, 1, 2].map(|c| self.scalar_from_physical(&p.comps[c]));
        SpectralField::from_components(grid, comps)
    }

    pub fn scalar_field_to_physical(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.check(f.grid())?;
        Ok(self.scalar_to_physical(f.coeffs()))
    }

    fn check(&self, grid: Grid) -> Result<()> {
        if grid.n() != self.n {
            return Err(Error::GridMismatch(format!(
                "field on n = {}, transform planned for n = {}",
                grid.n(),
                self.n
            )));
        }
        Ok(())
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
