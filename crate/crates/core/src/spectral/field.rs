use rustfft::num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Truncated Fourier coefficients of a real, zero-mean, 3-component periodic
/// vector field, `w(x) = Σ_k ŵ(k) e^{i k·x}` with
/// `ŵ(k) = (2π)^{-3} ∫ w e^{-i k·x} dx`.
///
/// Components are stored as three flat arrays in the lattice order documented
/// on [`Grid`]. The k = 0 coefficient and the Nyquist planes are held at zero
/// by every constructor and operation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    pub time: f64,
    comps: [Vec<Complex64>; 3],
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        SpectralField {
            grid,
            time: 0.0,
            comps: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]],
        }
    }

    /// Builds a field from raw component arrays. The mean and Nyquist planes are
    /// cleared; conjugate symmetry is the caller's responsibility and can be
    /// checked with [`SpectralField::conjugate_symmetry_defect`].
    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    actual: c.len(),
                });
            }
        }
        let mut f = SpectralField {
            grid,
            time: 0.0,
            comps,
        };
        f.pin_constraints();
        Ok(f)
    }

    /// Sets the real mode pair `amp·e^{ik·x} + conj`, i.e. `ŵ(k) = amp`,
    /// `ŵ(−k) = conj(amp)`.
    pub fn set_mode(&mut self, k: [i64; 3], amp: [Complex64; 3]) -> Result<()> {
        if k == [0, 0, 0] {
            return Err(Error::param("k", "the mean mode is pinned to zero"));
        }
        let g = self.grid;
        let idx = g
            .index_of(k)
            .filter(|&i| !g.is_nyquist(i))
            .ok_or_else(|| Error::param("k", format!("{k:?} is not representable on n = {}", g.n())))?;
        let jdx = g.conjugate_index(idx);
        for c in 0..3 {
            self.comps[c][idx] = amp[c];
            self.comps[c][jdx] = amp[c].conj();
        }
        Ok(())
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [Complex64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn get(&self, k: [i64; 3]) -> Option<[Complex64; 3]> {
        self.grid.index_of(k).map(|i| self.at(i))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Clears the mean and Nyquist coefficients.
    pub(crate) fn pin_constraints(&mut self) {
        let g = self.grid;
        let h = g.n() / 2;
        let n = g.n();
        for c in self.comps.iter_mut() {
            c[0] = ZERO;
            for a in 0..n {
                for b in 0..n {
                    c[g.join([h, a, b])] = ZERO;
                    c[g.join([a, h, b])] = ZERO;
                    c[g.join([a, b, h])] = ZERO;
                }
            }
        }
    }

    /// Multiplies every coefficient by the real scalar `mult(idx)`.
    pub fn map_diagonal(&self, mult: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        out.apply_diagonal(mult);
        out
    }

    pub fn apply_diagonal(&mut self, mult: impl Fn(usize) -> f64) {
        let len = self.grid.len();
        for idx in 0..len {
            let m = mult(idx);
            for c in self.comps.iter_mut() {
                c[idx] *= m;
            }
        }
    }

    /// Diagonal multiplier depending only on |k|².
    pub fn apply_radial(&mut self, mult: impl Fn(f64) -> f64) {
        let g = self.grid;
        self.apply_diagonal(|idx| mult(g.k2(idx)));
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_diagonal(|_| s)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert!(self.grid.same_lattice(&other.grid), "grid mismatch");
        for (dst, src) in self.comps.iter_mut().zip(other.comps.iter()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * a;
            }
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Real spectral inner product `Re Σ_k ŵ(k)·conj(v̂(k))`, i.e. the
    /// volume-normalized L² inner product `(2π)^{-3} ∫ w·v`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert!(self.grid.same_lattice(&other.grid), "grid mismatch");
        self.comps
            .iter()
            .zip(other.comps.iter())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.re * y.re + x.im * y.im)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Σ_k |ŵ(k)|².
    pub fn norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max_k |ŵ(−k) − conj(ŵ(k))| over all paired modes.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let j = g.conjugate_index(idx);
            for c in &self.comps {
                worst = worst.max((c[j] - c[idx].conj()).norm());
            }
        }
        worst
    }

    /// max_k |k·ŵ(k)| / max_k |k||ŵ(k)|, zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        let g = self.grid;
        let (mut num, mut den): (f64, f64) = (0.0, 0.0);
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            let w = self.at(idx);
            let kd = w[0] * k[0] as f64 + w[1] * k[1] as f64 + w[2] * k[2] as f64;
            num = num.max(kd.norm());
            let mag = (w[0].norm_sqr() + w[1].norm_sqr() + w[2].norm_sqr()).sqrt();
            den = den.max(mag * g.k2(idx).sqrt());
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Zeroes modes outside the dealiasing band.
    pub fn truncate_to_dealias_band(&mut self) {
        let g = self.grid;
        let kmax = g.dealias_kmax();
        self.apply_diagonal(|idx| if g.k_inf(idx) <= kmax { 1.0 } else { 0.0 });
    }
}

/// Scalar counterpart of [`SpectralField`], used for pressure and for
/// componentwise filter-error checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(ScalarField { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies each coefficient by a complex symbol `sym(k)`.
    pub fn map_symbol(&self, sym: impl Fn([i64; 3]) -> Complex64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, z)| z * sym(g.wavevector(idx)))
            .collect();
        ScalarField { grid: g, coeffs }
    }

    /// Spectral gradient as a vector field.
    pub fn gradient(&self) -> SpectralField {
        let g = self.grid;
        let mut out = SpectralField::zeros(g);
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            let q = self.coeffs[idx];
            for c in 0..3 {
                out.component_mut(c)[idx] = Complex64::new(0.0, k[c] as f64) * q;
            }
        }
        out
    }
}
