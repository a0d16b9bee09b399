//! Differential filter, van Cittert deconvolution and the truncation operator
//! `H_N = D_N ∘ G`, both as scalar transfer functions of the wavenumber
//! magnitude and as diagonal operators on [`SpectralField`].
//!
//! All transfer functions depend on `δk` only. Internally they are evaluated
//! in the rescaled variable `z = (δk)²`; the deconvolution residual ratio is
//! `x = z/(1+z)`. Powers `x^{N+1}` are formed as `exp(−(N+1)·ln(1+1/z))` so
//! that `1 − x^{N+1}` stays accurate for large `N` and large `δk`; `D̂_N` is
//! summed directly.

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

pub const DEFAULT_MAX_ORDER: u32 = 64;

/// Averaging radius `δ` and deconvolution order `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    delta: f64,
    order: u32,
    max_order: u32,
}

impl FilterSpec {
    pub fn new(delta: f64, order: u32) -> Result<Self> {
        Self::with_max_order(delta, order, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(delta: f64, order: u32, max_order: u32) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", format!("must be positive and finite, got {delta}")));
        }
        if order > max_order {
            return Err(Error::OrderTooLarge {
                order,
                max: max_order,
            });
        }
        Ok(FilterSpec {
            delta,
            order,
            max_order,
        })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    #[inline]
    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn with_order(&self, order: u32) -> Result<Self> {
        Self::with_max_order(self.delta, order, self.max_order)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::with_max_order(delta, self.order, self.max_order)
    }

    #[inline]
    fn z(&self, k: f64) -> f64 {
        let dk = self.delta * k;
        dk * dk
    }

    #[inline]
    fn z_from_k2(&self, k2: f64) -> f64 {
        self.delta * self.delta * k2
    }
}

/// `(z/(1+z))^{N+1}`.
#[inline]
fn residual_power(z: f64, order: u32) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    (-(order as f64 + 1.0) * (1.0 / z).ln_1p()).exp()
}

/// Deconvolution-error multiplier at squared wavenumber `k2`.
pub(crate) fn residual_power_k2(k2: f64, spec: &FilterSpec) -> f64 {
    residual_power(spec.z_from_k2(k2), spec.order)
}

/// `1 − (z/(1+z))^{N+1}`.
#[inline]
fn hn_rescaled(z: f64, order: u32) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    -(-(order as f64 + 1.0) * (1.0 / z).ln_1p()).exp_m1()
}

/// `Ĝ(k) = 1/(1+δ²k²)`.
pub fn transfer_g(k: f64, spec: &FilterSpec) -> f64 {
    1.0 / (1.0 + spec.z(k))
}

/// `Σ_{n=0}^{N} x^n` with `x = z/(1+z)`, by Horner's rule. Every term is
/// positive, so there is no cancellation and `N = 0` gives exactly 1.
#[inline]
fn dn_rescaled(z: f64, order: u32) -> f64 {
    let x = z / (1.0 + z);
    (0..order).fold(1.0, |acc, _| 1.0 + x * acc)
}

/// `D̂_N(k) = Σ_{n=0}^{N} (1 − Ĝ)^n = (1+δ²k²)[1 − (δ²k²/(1+δ²k²))^{N+1}]`.
pub fn transfer_dn(k: f64, spec: &FilterSpec) -> f64 {
    dn_rescaled(spec.z(k), spec.order)
}

/// `Ĥ_N(k) = 1 − (δ²k²/(1+δ²k²))^{N+1}`.
pub fn transfer_hn(k: f64, spec: &FilterSpec) -> f64 {
    hn_rescaled(spec.z(k), spec.order)
}

/// Multiplier of the deconvolution error `w − D_N w̄`:
/// `(δ²k²/(1+δ²k²))^{N+1}`.
pub fn transfer_deconv_error(k: f64, spec: &FilterSpec) -> f64 {
    residual_power(spec.z(k), spec.order)
}

/// Transfer function of exact deconvolution, `1 + δ²k²`.
pub fn transfer_exact_deconv(k: f64, spec: &FilterSpec) -> f64 {
    1.0 + spec.z(k)
}

/// Differential filter `w̄ = (−δ²Δ + 1)^{-1} w`.
pub fn apply_filter(f: &SpectralField, spec: &FilterSpec) -> SpectralField {
    let mut out = f.clone();
    out.apply_radial(|k2| 1.0 / (1.0 + spec.z_from_k2(k2)));
    out
}

/// `D_N` by its closed-form transfer function.
pub fn apply_dn(f: &SpectralField, spec: &FilterSpec) -> SpectralField {
    let mut out = f.clone();
    out.apply_radial(|k2| dn_rescaled(spec.z_from_k2(k2), spec.order));
    out
}

/// `H_N = D_N ∘ G` by its closed-form transfer function.
pub fn apply_hn(f: &SpectralField, spec: &FilterSpec) -> SpectralField {
    let mut out = f.clone();
    apply_hn_in_place(&mut out, spec);
    out
}

pub fn apply_hn_in_place(f: &mut SpectralField, spec: &FilterSpec) {
    f.apply_radial(|k2| hn_rescaled(spec.z_from_k2(k2), spec.order));
}

/// `w − D_N w̄ = (I − G)^{N+1} w`.
pub fn deconv_error_field(f: &SpectralField, spec: &FilterSpec) -> SpectralField {
    let mut out = f.clone();
    out.apply_radial(|k2| residual_power(spec.z_from_k2(k2), spec.order));
    out
}

/// van Cittert iteration `w_{n+1} = w_n + (w̄ − G w_n)` from `w_0 = w̄`,
/// run for exactly `N` steps.
pub fn van_cittert(fbar: &SpectralField, spec: &FilterSpec) -> Result<SpectralField> {
    van_cittert_counted(fbar, spec).map(|(w, _)| w)
}

/// As [`van_cittert`], also returning the number of filter applications.
pub fn van_cittert_counted(fbar: &SpectralField, spec: &FilterSpec) -> Result<(SpectralField, u32)> {
    if spec.order > spec.max_order {
        return Err(Error::OrderTooLarge {
            order: spec.order,
            max: spec.max_order,
        });
    }
    let mut w = fbar.clone();
    let mut applications = 0;
    for _ in 0..spec.order {
        van_cittert_step(&mut w, fbar, spec);
        applications += 1;
    }
    Ok((w, applications))
}

/// One van Cittert update `w ← w + (w̄ − G w)`: a single filter application.
pub fn van_cittert_step(w: &mut SpectralField, fbar: &SpectralField, spec: &FilterSpec) {
    let gw = apply_filter(w, spec);
    w.axpy(1.0, fbar);
    w.axpy(-1.0, &gw);
}

/// `H_N w` evaluated by filtering then running van Cittert.
pub fn apply_hn_iterative(f: &SpectralField, spec: &FilterSpec) -> SpectralField {
    let fbar = apply_filter(f, spec);
    // `spec` was validated at construction, so the order is within bounds.
    van_cittert(&fbar, spec).expect("validated filter order")
}

/// Root `k*` of `Ĥ_N(k*) = 1/2` by bisection on the strictly decreasing
/// transfer function.
pub fn cutoff_wavenumber(spec: &FilterSpec) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0 / spec.delta;
    while transfer_hn(hi, spec) > 0.5 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if transfer_hn(mid, spec) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `k* = δ^{-1} (2^{1/(N+1)} − 1)^{-1/2}`.
pub fn cutoff_wavenumber_closed_form(spec: &FilterSpec) -> f64 {
    let r = (std::f64::consts::LN_2 / (spec.order as f64 + 1.0)).exp_m1();
    1.0 / (spec.delta * r.sqrt())
}

/// Cutoff frequency `k_c = ⌊k*⌋`. Roots within `1e-9` (relative) of an integer
/// are snapped to it before flooring so that exact cases such as `N = 0`,
/// `δ = 1/m` give `k_c = m`.
pub fn cutoff_frequency(spec: &FilterSpec) -> u64 {
    let k = cutoff_wavenumber(spec);
    let r = k.round();
    if (k - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        k.floor() as u64
    }
}

/// `sup_{0 ≤ k ≤ k_max} D̂_N(k)` over a geometric sample that includes `k_max`.
pub fn operator_norm_dn(spec: &FilterSpec, k_max: f64) -> Result<f64> {
    if !(k_max > 0.0) {
        return Err(Error::param("k_max", "must be positive"));
    }
    let samples = 512;
    let lo = (1e-3 / spec.delta).min(k_max);
    let ratio = (k_max / lo).powf(1.0 / samples as f64);
    let mut best = transfer_dn(0.0, spec);
    let mut k = lo;
    for _ in 0..samples {
        best = best.max(transfer_dn(k, spec));
        k *= ratio;
    }
    Ok(best.max(transfer_dn(k_max, spec)))
}

/// Computed constant of the smoothing bound `||H_N w||_{s+2} ≤ C ||w||_s`:
/// `C = max_{k≠0} Ĥ_N(k)·|k|²` over the lattice.
pub fn smoothing_constant(spec: &FilterSpec, grid: Grid) -> f64 {
    (1..grid.len())
        .map(|idx| {
            let k2 = grid.k2(idx);
            hn_rescaled(spec.z_from_k2(k2), spec.order) * k2
        })
        .fold(0.0, f64::max)
}

/// Minimum of `Ĥ_N` over the band `|k| ≤ k_c` (at least 1/2 by definition of
/// the cutoff).
pub fn coercivity_constant(spec: &FilterSpec) -> f64 {
    transfer_hn(cutoff_frequency(spec) as f64, spec)
}

/// One row of a transfer table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferRow {
    pub k: f64,
    pub g_hat: f64,
    pub d_hat: f64,
    pub h_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferTable {
    pub spec: FilterSpec,
    pub rows: Vec<TransferRow>,
}

impl TransferTable {
    pub fn new(spec: FilterSpec, ks: impl IntoIterator<Item = f64>) -> Self {
        let rows = ks
            .into_iter()
            .map(|k| TransferRow {
                k,
                g_hat: transfer_g(k, &spec),
                d_hat: transfer_dn(k, &spec),
                h_hat: transfer_hn(k, &spec),
            })
            .collect();
        TransferTable { spec, rows }
    }

    /// Uniform sample of `[0, k_max]` with `points` rows.
    pub fn uniform(spec: FilterSpec, k_max: f64, points: usize) -> Self {
        let m = points.max(2) - 1;
        Self::new(spec, (0..=m).map(|i| k_max * i as f64 / m as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random::random_field, Complex64};

    fn spec(delta: f64, order: u32) -> FilterSpec {
        FilterSpec::new(delta, order).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(FilterSpec::new(0.0, 1).is_err());
        assert!(FilterSpec::new(-1.0, 1).is_err());
        assert!(matches!(
            FilterSpec::new(1.0, 65),
            Err(Error::OrderTooLarge { order: 65, max: 64 })
        ));
        assert!(FilterSpec::with_max_order(1.0, 100, 128).is_ok());
    }

    #[test]
    fn g_values() {
        assert_eq!(transfer_g(0.0, &spec(1.0, 0)), 1.0);
        assert_eq!(transfer_g(1.0, &spec(1.0, 0)), 0.5);
        assert_eq!(transfer_g(10.0, &spec(0.1, 0)), 0.5);
    }

    #[test]
    fn dn_values() {
        for n in 0..10 {
            assert_eq!(transfer_dn(0.0, &spec(1.0, n)), 1.0);
        }
        assert!((transfer_dn(1.0, &spec(1.0, 1)) - 1.5).abs() < 1e-15);
        assert!((transfer_dn(1.0, &spec(1.0, 2)) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn hn_values() {
        assert_eq!(transfer_hn(0.0, &spec(0.3, 7)), 1.0);
        assert!((transfer_hn(1.0, &spec(1.0, 0)) - 0.5).abs() < 1e-15);
        let expect = 1.0 - 2f64.powi(-11);
        assert!((transfer_hn(1.0, &spec(1.0, 10)) - expect).abs() < 1e-15);
    }

    #[test]
    fn van_cittert_examples() {
        let g = Grid::new(8).unwrap();
        let f = random_field(g, 3, -2.0, 1.0, 5);
        let s0 = spec(0.7, 0);
        assert_eq!(van_cittert(&f, &s0).unwrap(), f);

        let mut m = SpectralField::zeros(g);
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        m.set_mode([1, 0, 0], [z, one, z]).unwrap();
        let out = van_cittert(&m, &spec(1.0, 1)).unwrap();
        assert!((out.get([1, 0, 0]).unwrap()[1] - 1.5).norm() < 1e-15);
    }

    #[test]
    fn van_cittert_applies_filter_exactly_n_times() {
        let g = Grid::new(6).unwrap();
        let f = random_field(g, 2, 0.0, 1.0, 1);
        for n in [0, 1, 5, 12] {
            let (_, count) = van_cittert_counted(&f, &spec(0.4, n)).unwrap();
            assert_eq!(count, n);
        }
    }

    #[test]
    fn deconv_error_examples() {
        let s = spec(1.0, 0);
        assert!((transfer_deconv_error(1.0, &s) - 0.5).abs() < 1e-16);
        let s = spec(0.1, 2);
        let expect = (0.01f64 / 1.01).powi(3);
        assert!((transfer_deconv_error(1.0, &s) / expect - 1.0).abs() < 1e-12);
        assert!((expect - 9.706e-7).abs() < 1e-10);
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_frequency(&spec(1.0, 0)), 1);
        assert_eq!(cutoff_frequency(&spec(0.5, 0)), 2);
        assert_eq!(cutoff_frequency(&spec(0.25, 0)), 4);
        let mut prev = 0;
        for n in 0..=50 {
            let s = spec(1.0, n);
            let kc = cutoff_frequency(&s);
            assert!(kc >= prev);
            prev = kc;
            let a = cutoff_wavenumber(&s);
            let b = cutoff_wavenumber_closed_form(&s);
            assert!((a - b).abs() <= 1e-9 * b, "N={n}: {a} vs {b}");
        }
        assert!(cutoff_frequency(&spec(1.0, 50)) > cutoff_frequency(&spec(1.0, 10)));
    }

    #[test]
    fn operator_norm_examples() {
        for k_max in [0.1, 1.0, 100.0] {
            assert_eq!(operator_norm_dn(&spec(1.0, 0), k_max).unwrap(), 1.0);
        }
        let v = operator_norm_dn(&spec(1.0, 3), 1e3).unwrap();
        assert!((v - 4.0).abs() < 1e-4 && v <= 4.0);
        assert!(operator_norm_dn(&spec(1.0, 3), 0.0).is_err());
    }

    #[test]
    fn table_consistency() {
        let t = TransferTable::uniform(spec(0.5, 3), 20.0, 101);
        assert_eq!(t.rows.len(), 101);
        for r in &t.rows {
            assert!(r.g_hat > 0.0 && r.g_hat <= 1.0);
            assert!(r.d_hat >= 1.0 && r.d_hat <= 4.0);
            assert!(r.h_hat > 0.0 && r.h_hat <= 1.0);
            assert!((r.h_hat - r.d_hat * r.g_hat).abs() <= 1e-12);
        }
    }

    #[test]
    fn coercivity_at_least_half() {
        for n in [0, 1, 4, 16] {
            assert!(coercivity_constant(&spec(0.3, n)) >= 0.5);
        }
    }
}
