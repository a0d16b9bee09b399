use crate::error::{Error, Result};

/// Uniform Fourier lattice on the periodic box (0, 2π)³.
///
/// Each axis carries `n` modes stored in FFT order: `0, 1, …, n/2−1, −n/2, …, −1`.
/// The flat index of `(i1, i2, i3)` is `(i1 * n + i2) * n + i3`. The unpaired
/// Nyquist plane (any axis at −n/2) has no conjugate partner on the lattice and
/// is kept at zero so that every stored field is real in physical space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, dealias_fraction: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be an even integer >= 4, got {n}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Grid {
            n,
            dealias_fraction,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of lattice points, `n³`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumber stored at axis position `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn axis_position(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    #[inline]
    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn join(&self, pos: [usize; 3]) -> usize {
        (pos[0] * self.n + pos[1]) * self.n + pos[2]
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.split(idx);
        [self.wavenumber(a), self.wavenumber(b), self.wavenumber(c)]
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.join([
            self.axis_position(k[0])?,
            self.axis_position(k[1])?,
            self.axis_position(k[2])?,
        ]))
    }

    /// Squared Euclidean magnitude |k|².
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
    }

    #[inline]
    pub fn k_inf(&self, idx: usize) -> i64 {
        let k = self.wavevector(idx);
        k[0].abs().max(k[1].abs()).max(k[2].abs())
    }

    /// True on the unpaired −n/2 planes.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = -(self.n as i64) / 2;
        self.wavevector(idx).contains(&h)
    }

    /// Index holding the wavevector −k. Nyquist entries map to themselves.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let [a, b, c] = self.split(idx);
        self.join([(n - a) % n, (n - b) % n, (n - c) % n])
    }

    /// Largest retained |k_j| under the dealiasing rule. For the default 2/3
    /// fraction this is the largest K with 3K < n, which keeps quadratic
    /// products alias-free on the retained band.
    pub fn dealias_kmax(&self) -> i64 {
        let half = self.n as f64 / 2.0;
        ((self.dealias_fraction * half - 1e-9).ceil() as i64 - 1).max(0)
    }

    #[inline]
    pub fn in_dealias_band(&self, idx: usize) -> bool {
        self.k_inf(idx) <= self.dealias_kmax()
    }

    /// Physical sample spacing 2π/n.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.n == other.n
    }
}
