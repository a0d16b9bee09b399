use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use super::ops::leray_project_in_place;

/// Random real, zero-mean field with Gaussian coefficients on
/// `1 ≤ |k|_∞ ≤ kmax` and per-mode variance `|k|^{slope−2}` (an energy
/// spectrum scaling like `k^{slope}`). The result is scaled so that
/// `Σ|ŵ|² = amplitude²` and is deterministic in `seed`.
pub fn random_field(grid: Grid, kmax: i64, slope: f64, amplitude: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    let kmax = kmax.min(grid.n() as i64 / 2 - 1);
    for idx in 1..grid.len() {
        if grid.is_nyquist(idx) || grid.k_inf(idx) > kmax {
            continue;
        }
        let j = grid.conjugate_index(idx);
        if j < idx {
            continue;
        }
        let sd = grid.k2(idx).powf((slope - 2.0) / 4.0);
        let mut amp = [Complex64::new(0.0, 0.0); 3];
        for a in amp.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *a = Complex64::new(re, im) * sd;
        }
        for c in 0..3 {
            f.component_mut(c)[idx] = amp[c];
            f.component_mut(c)[j] = amp[c].conj();
        }
    }
    normalize(&mut f, amplitude);
    f
}

/// As [`random_field`], followed by solenoidal projection and rescaling.
pub fn random_solenoidal(
    grid: Grid,
    kmax: i64,
    slope: f64,
    amplitude: f64,
    seed: u64,
) -> SpectralField {
    let mut f = random_field(grid, kmax, slope, 1.0, seed);
    leray_project_in_place(&mut f);
    normalize(&mut f, amplitude);
    f
}

fn normalize(f: &mut SpectralField, amplitude: f64) {
    let norm = f.norm_sq().sqrt();
    if norm > 0.0 {
        let s = amplitude / norm;
        f.apply_diagonal(|_| s);
    }
}
