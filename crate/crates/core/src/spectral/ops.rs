//! Norms, projections and spectral derivatives on [`SpectralField`].

use rustfft::num_complex::Complex64;

use super::field::{ScalarField, SpectralField};
use crate::error::{Error, Result};

/// Sobolev exponent `s` for the `H_s` norm. May be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOrder(pub f64);

impl NormOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::param("s", "Sobolev exponent must be finite"));
        }
        Ok(NormOrder(s))
    }
}

impl From<f64> for NormOrder {
    fn from(s: f64) -> Self {
        NormOrder(s)
    }
}

/// `||w||_s = (Σ_{k≠0} |k|^{2s} |ŵ(k)|²)^{1/2}`.
pub fn hs_norm(f: &SpectralField, s: impl Into<NormOrder>) -> f64 {
    let s = s.into().0;
    let g = f.grid();
    let mut acc = 0.0;
    for idx in 1..g.len() {
        let w = f.at(idx);
        let m = w[0].norm_sqr() + w[1].norm_sqr() + w[2].norm_sqr();
        if m == 0.0 {
            continue;
        }
        let k2 = g.k2(idx);
        acc += if s == 0.0 { m } else { k2.powf(s) * m };
    }
    acc.sqrt()
}

/// Kinetic energy `½ Σ_k |ŵ(k)|²`, equal to `(2π)^{-3} ∫ ½|w|² dx`.
pub fn energy(f: &SpectralField) -> f64 {
    0.5 * f.norm_sq()
}

/// Energy per Euclidean shell `k−1 < |k| ≤ k`, returned for `k = 1..=K` where
/// `K = ⌈max |k|⌉` over the lattice, so the shells partition every mode and
/// `Σ E(k) = energy(f)` by regrouping. Entry `i` holds shell `k = i + 1`.
pub fn shell_spectrum(f: &SpectralField) -> Vec<f64> {
    let g = f.grid();
    let half = (g.n() / 2) as f64;
    let kmax = (3.0 * half * half).sqrt().ceil() as usize;
    let mut shells = vec![0.0; kmax];
    for idx in 1..g.len() {
        let w = f.at(idx);
        let e = 0.5 * (w[0].norm_sqr() + w[1].norm_sqr() + w[2].norm_sqr());
        if e == 0.0 {
            continue;
        }
        let shell = g.k2(idx).sqrt().ceil() as usize;
        shells[shell - 1] += e;
    }
    shells
}

/// Solenoidal projection `ŵ ← (I − k kᵀ/|k|²) ŵ`.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(f: &mut SpectralField) {
    let g = f.grid();
    for idx in 1..g.len() {
        let k = g.wavevector(idx);
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let k2 = g.k2(idx);
        let w = f.at(idx);
        let kd = (w[0] * kf[0] + w[1] * kf[1] + w[2] * kf[2]) / k2;
        for c in 0..3 {
            f.component_mut(c)[idx] = w[c] - kd * kf[c];
        }
    }
}

/// Orthogonal projection onto trigonometric polynomials of degree `≤ m`
/// (`|k|_∞ ≤ m`).
pub fn project_pn(f: &SpectralField, m: i64) -> Result<SpectralField> {
    if m < 0 {
        return Err(Error::param("m", format!("degree must be nonnegative, got {m}")));
    }
    let g = f.grid();
    Ok(f.map_diagonal(|idx| if g.k_inf(idx) <= m { 1.0 } else { 0.0 }))
}

/// Orthogonal projection onto `span{e^{ik·x} : |k| ≤ radius}`.
pub fn project_ball(f: &SpectralField, radius: f64) -> SpectralField {
    let g = f.grid();
    let r2 = radius * radius;
    f.map_diagonal(|idx| if g.k2(idx) <= r2 { 1.0 } else { 0.0 })
}

/// Spectral gradient: entry `j` is the vector field `∂_j w`.
pub fn gradient(f: &SpectralField) -> [SpectralField; 3] {
    [0, 1, 2].map(|j| partial(f, j))
}

/// `∂_j w`, multiplication by `i k_j`.
pub fn partial(f: &SpectralField, j: usize) -> SpectralField {
    let g = f.grid();
    let mut out = f.clone();
    for idx in 0..g.len() {
        let ik = Complex64::new(0.0, g.wavevector(idx)[j] as f64);
        for c in 0..3 {
            out.component_mut(c)[idx] *= ik;
        }
    }
    out
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    f.map_diagonal(|idx| -g.k2(idx))
}

pub fn curl(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    let mut out = SpectralField::zeros(g);
    out.time = f.time;
    for idx in 0..g.len() {
        let k = g.wavevector(idx);
        let ik = [0, 1, 2].map(|c| Complex64::new(0.0, k[c] as f64));
        let w = f.at(idx);
        out.component_mut(0)[idx] = ik[1] * w[2] - ik[2] * w[1];
        out.component_mut(1)[idx] = ik[2] * w[0] - ik[0] * w[2];
        out.component_mut(2)[idx] = ik[0] * w[1] - ik[1] * w[0];
    }
    out
}

pub fn divergence(f: &SpectralField) -> ScalarField {
    let g = f.grid();
    let mut out = ScalarField::zeros(g);
    for idx in 0..g.len() {
        let k = g.wavevector(idx);
        let w = f.at(idx);
        out.coeffs_mut()[idx] =
            Complex64::new(0.0, 1.0) * (w[0] * k[0] as f64 + w[1] * k[1] as f64 + w[2] * k[2] as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;

    fn mode(k: [i64; 3], amp: [f64; 3]) -> SpectralField {
        let mut f = SpectralField::zeros(Grid::new(8).unwrap());
        f.set_mode(k, amp.map(|a| Complex64::new(a, 0.0))).unwrap();
        f
    }

    #[test]
    fn single_shell_norm_scaling() {
        let f = mode([1, 0, 0], [0.0, 1.0, 0.0]);
        assert!((hs_norm(&f, 1.0) - hs_norm(&f, 0.0)).abs() < 1e-15);
        let f = mode([2, 1, 0], [1.0, -2.0, 0.0]);
        let k = 5f64.sqrt();
        assert!((hs_norm(&f, 1.0) - k * hs_norm(&f, 0.0)).abs() < 1e-13);
        assert!((hs_norm(&f, -1.0) - hs_norm(&f, 0.0) / k).abs() < 1e-13);
    }

    #[test]
    fn zero_field_norms() {
        let f = SpectralField::zeros(Grid::new(8).unwrap());
        for s in [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0] {
            assert_eq!(hs_norm(&f, s), 0.0);
        }
        assert_eq!(energy(&f), 0.0);
    }

    #[test]
    fn one_shell_spectrum() {
        let f = mode([0, 1, 0], [0.3, 0.0, 0.0]);
        let e = shell_spectrum(&f);
        assert!((e[0] - energy(&f)).abs() < 1e-16);
        assert!(e[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn orthogonal_modes_add() {
        let a = mode([1, 0, 0], [0.0, 1.0, 0.0]);
        let b = mode([0, 2, 0], [0.0, 0.0, 0.5]);
        let s = a.add(&b);
        assert!((energy(&s) - energy(&a) - energy(&b)).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let grad = mode([1, 0, 0], [1.0, 0.0, 0.0]);
        assert_eq!(leray_project(&grad).max_abs(), 0.0);
        let sol = mode([1, 0, 0], [0.0, 1.0, 0.0]);
        assert_eq!(leray_project(&sol), sol);
    }

    #[test]
    fn pn_truncation() {
        let f = mode([3, 1, 0], [0.0, 0.0, 1.0]);
        assert_eq!(project_pn(&f, 2).unwrap().max_abs(), 0.0);
        assert_eq!(project_pn(&f, 4).unwrap(), f);
        assert_eq!(project_pn(&f, 0).unwrap().max_abs(), 0.0);
        assert!(project_pn(&f, -1).is_err());
    }

    #[test]
    fn laplacian_eigenfunction() {
        let f = mode([0, 0, 1], [1.0, 0.0, 0.0]);
        assert_eq!(laplacian(&f), f.scaled(-1.0));
        let z = SpectralField::zeros(Grid::new(8).unwrap());
        assert!(gradient(&z).iter().all(|g| g.max_abs() == 0.0));
    }

    #[test]
    fn curl_of_shear() {
        // w = (0, cos x, 0)  =>  curl w = (0, 0, -sin x)
        let f = mode([1, 0, 0], [0.0, 0.5, 0.0]);
        let c = curl(&f);
        let z = c.get([1, 0, 0]).unwrap();
        assert!((z[2] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!(divergence(&f).norm_sq() == 0.0);
    }
}
