//! Measured quantities: energy records and the discrete energy balance,
//! consistency-error tensors, filter-error bounds, time averages and
//! model-versus-reference errors.
//!
//! Norms follow the crate convention (volume-normalized, `‖w‖² = Σ|ŵ|²`)
//! except where a quantity is an integral over the box, which is then stated.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filtering::{apply_filter, deconv_error_field, residual_power_k2, FilterSpec};
use crate::solver::{RunOutput, SolverConfig, Trajectory};
use crate::spectral::{hs_norm, FftPlan, Grid, SpectralField};

/// Side of the periodic box.
pub const BOX_LENGTH: f64 = 2.0 * PI;

/// Box volume `(2π)³`.
pub const BOX_VOLUME: f64 = BOX_LENGTH * BOX_LENGTH * BOX_LENGTH;

/// Per-step scalars. `energy = ½‖w‖²`, `h1_seminorm_sq = ‖∇w‖²`,
/// `dissipation = ν‖∇w‖²`, `input_power = ⟨f_eff, w⟩`, all per unit volume.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagRecord {
    pub t: f64,
    pub energy: f64,
    pub h1_seminorm_sq: f64,
    pub dissipation: f64,
    pub input_power: f64,
    /// `E(t) − E(0) + ∫ε − ∫⟨f_eff, w⟩`.
    pub balance_residual: f64,
}

/// Record of a single state with no history (`balance_residual = 0`).
pub fn instantaneous_record(state: &SpectralField, forcing: &SpectralField, nu: f64) -> DiagRecord {
    let h1 = hs_norm(state, 1.0).powi(2);
    DiagRecord {
        t: state.time,
        energy: 0.5 * state.norm_sq(),
        h1_seminorm_sq: h1,
        dissipation: nu * h1,
        input_power: forcing.inner(state),
        balance_residual: 0.0,
    }
}

/// [`instantaneous_record`] with the forcing `config` actually applies.
pub fn energy_record(state: &SpectralField, config: &SolverConfig) -> Result<DiagRecord> {
    let f = config.effective_forcing()?;
    Ok(instantaneous_record(state, &f, config.nu))
}

/// Running accumulation of the energy equality. [`EnergyBalance::push`]
/// integrates by the trapezoidal rule; [`EnergyBalance::push_step`] takes
/// increments from the integrator.
#[derive(Debug, Clone)]
pub struct EnergyBalance {
    nu: f64,
    first: Option<DiagRecord>,
    last: Option<DiagRecord>,
    dissipated: f64,
    injected: f64,
}

impl EnergyBalance {
    pub fn new(nu: f64) -> Self {
        EnergyBalance {
            nu,
            first: None,
            last: None,
            dissipated: 0.0,
            injected: 0.0,
        }
    }

    /// Adds the state at the next time level and returns its record.
    pub fn push(&mut self, state: &SpectralField, forcing: &SpectralField) -> DiagRecord {
        let mut rec = instantaneous_record(state, forcing, self.nu);
        if let Some(prev) = self.last {
            let h = rec.t - prev.t;
            self.dissipated += 0.5 * h * (prev.dissipation + rec.dissipation);
            self.injected += 0.5 * h * (prev.input_power + rec.input_power);
        }
        let e0 = self.first.get_or_insert(rec).energy;
        rec.balance_residual = rec.energy - e0 + self.dissipated - self.injected;
        self.last = Some(rec);
        rec
    }

    /// Adds the next state together with the time integrals of dissipation
    /// and input power over the step just taken, as computed by the
    /// integrator.
    pub fn push_step(&mut self, state: &SpectralField, forcing: &SpectralField, dissipated: f64, injected: f64) -> DiagRecord {
        let mut rec = instantaneous_record(state, forcing, self.nu);
        if self.last.is_some() {
            self.dissipated += dissipated;
            self.injected += injected;
        }
        let e0 = self.first.get_or_insert(rec).energy;
        rec.balance_residual = rec.energy - e0 + self.dissipated - self.injected;
        self.last = Some(rec);
        rec
    }

    /// `∫₀ᵗ ν‖∇w‖²` so far.
    pub fn dissipated(&self) -> f64 {
        self.dissipated
    }

    /// `∫₀ᵗ ⟨f_eff, w⟩` so far.
    pub fn injected(&self) -> f64 {
        self.injected
    }
}

/// Largest `|balance_residual|` in a record stream.
pub fn max_balance_residual(records: &[DiagRecord]) -> f64 {
    records.iter().map(|r| r.balance_residual.abs()).fold(0.0, f64::max)
}

/// Right side of the a-priori bound `sup_t ‖w‖² ≤ ‖w₀‖² + ν⁻¹ ∫₀ᵀ ‖f‖²_{−1}`
/// for steady `f`.
pub fn apriori_energy_bound(w0: &SpectralField, forcing: &SpectralField, nu: f64, t_end: f64) -> f64 {
    let f_neg = hs_norm(forcing, -1.0).powi(2);
    w0.norm_sq() + t_end * f_neg / nu
}

/// `sup_t ‖w(t)‖²` over the records.
pub fn sup_l2_sq(records: &[DiagRecord]) -> f64 {
    records.iter().map(|r| 2.0 * r.energy).fold(0.0, f64::max)
}

/// Consistency tensor `τ_N = D_N(v̄) ⊗ v − v ⊗ v` on the physical grid.
///
/// Because `τ_N = −e ⊗ v` with `e = v − D_N v̄`, the tensor is rank one and
/// generally not symmetric; all nine components are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTensor {
    pub n: usize,
    /// Row-major `τ_ij`, `comps[3*i + j]`.
    pub comps: [Vec<f64>; 9],
    /// `∫_Ω |τ|_F` by the uniform-cell rule.
    pub l1_norm: f64,
}

/// Builds `τ_N` from `v` truncated to the dealiasing band.
pub fn tau_tensor(v: &SpectralField, spec: &FilterSpec) -> TauTensor {
    let g = v.grid();
    let plan = FftPlan::for_grid(g);
    let mut v = v.clone();
    v.truncate_to_dealias_band();
    let e = deconv_error_field(&v, spec);
    let vp = plan.to_physical(&v).expect("same grid");
    let ep = plan.to_physical(&e).expect("same grid");
    let len = g.len();
    let mut comps: [Vec<f64>; 9] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            comps[3 * i + j] = (0..len).map(|x| -ep.comps[i][x] * vp.comps[j][x]).collect();
        }
    }
    let cell = BOX_VOLUME / len as f64;
    let l1_norm = (0..len)
        .map(|x| comps.iter().map(|c| c[x] * c[x]).sum::<f64>().sqrt())
        .sum::<f64>()
        * cell;
    TauTensor {
        n: g.n(),
        comps,
        l1_norm,
    }
}

/// Right-hand sides of the consistency bound, as integrals over the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyBound {
    /// `δ^{2N+2} ‖Δ^{N+1}(−δ²Δ+1)^{−(N+1)} v‖ ‖v‖`.
    pub exact: f64,
    /// `δ^{2N+2} ‖Δ^{N+1} v‖ ‖v‖` (constant 1).
    pub crude: f64,
}

/// Evaluates both bounds spectrally, on `v` truncated like [`tau_tensor`].
pub fn consistency_bound_rhs(v: &SpectralField, spec: &FilterSpec) -> ConsistencyBound {
    let mut v = v.clone();
    v.truncate_to_dealias_band();
    let g = v.grid();
    let p = spec.order() as i32 + 1;
    let d2p = spec.delta().powi(2 * p);
    let (mut exact, mut crude, mut plain) = (0.0, 0.0, 0.0);
    for idx in 1..g.len() {
        let a: f64 = v.at(idx).iter().map(|c| c.norm_sqr()).sum();
        if a == 0.0 {
            continue;
        }
        let k2 = g.k2(idx);
        exact += residual_power_k2(k2, spec).powi(2) * a;
        crude += k2.powi(2 * p) * a;
        plain += a;
    }
    ConsistencyBound {
        exact: BOX_VOLUME * exact.sqrt() * plain.sqrt(),
        crude: BOX_VOLUME * d2p * crude.sqrt() * plain.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub delta: f64,
    pub order: u32,
    pub l1_tau: f64,
    pub bound_rhs: f64,
    pub crude_bound: f64,
    pub ratio: f64,
}

pub fn consistency_report(v: &SpectralField, spec: &FilterSpec) -> ConsistencyReport {
    let tau = tau_tensor(v, spec);
    let b = consistency_bound_rhs(v, spec);
    ConsistencyReport {
        delta: spec.delta(),
        order: spec.order(),
        l1_tau: tau.l1_norm,
        bound_rhs: b.exact,
        crude_bound: b.crude,
        ratio: if b.exact > 0.0 { tau.l1_norm / b.exact } else { 0.0 },
    }
}

/// One derivative multi-index of the filter-error check. With `e = u − ū`:
/// `lhs = ‖∂^β e‖`, `equality_rhs = δ²‖Δ∂^β ū‖`, `laplacian_bound =
/// δ²‖Δ∂^β u‖`, `gradient_bound = (δ/2)‖∇∂^β u‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterErrorRow {
    pub beta: [u32; 3],
    pub lhs: f64,
    pub equality_rhs: f64,
    pub laplacian_bound: f64,
    pub gradient_bound: f64,
}

impl FilterErrorRow {
    pub fn equality_defect(&self) -> f64 {
        let scale = self.lhs.max(self.equality_rhs);
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.equality_rhs).abs() / scale
        }
    }

    /// Equality to `tol` (relative) and both inequalities up to `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        let slack = tol * self.lhs.max(f64::MIN_POSITIVE);
        self.equality_defect() <= tol
            && self.lhs <= self.laplacian_bound + slack
            && self.lhs <= self.gradient_bound + slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterErrorReport {
    pub delta: f64,
    pub rows: Vec<FilterErrorRow>,
}

impl FilterErrorReport {
    pub fn all_hold(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.holds(tol))
    }
}

/// Multi-indices with `|β| ≤ order`, graded.
pub fn multi_indices(order: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=order {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

/// Evaluates the filter-error identity and bounds for every `|β| ≤
/// beta_order` (at most 2) by spectral sums.
pub fn filter_error_bounds_check(u: &SpectralField, spec: &FilterSpec, beta_order: u32) -> Result<FilterErrorReport> {
    if beta_order > 2 {
        return Err(Error::param("beta_order", "must be at most 2"));
    }
    let g = u.grid();
    let delta = spec.delta();
    let ubar = apply_filter(u, spec);
    let e = u.sub(&ubar);
    let rows = multi_indices(beta_order)
        .into_iter()
        .map(|beta| {
            let (mut lhs, mut eq, mut lap, mut grad) = (0.0, 0.0, 0.0, 0.0);
            for idx in 1..g.len() {
                let k = g.wavevector(idx);
                let sym: f64 = (0..3).map(|j| (k[j] as f64).powi(2 * beta[j] as i32)).product();
                if sym == 0.0 {
                    continue;
                }
                let k2 = g.k2(idx);
                let a_e: f64 = e.at(idx).iter().map(|c| c.norm_sqr()).sum();
                let a_b: f64 = ubar.at(idx).iter().map(|c| c.norm_sqr()).sum();
                let a_u: f64 = u.at(idx).iter().map(|c| c.norm_sqr()).sum();
                lhs += sym * a_e;
                eq += sym * k2 * k2 * a_b;
                lap += sym * k2 * k2 * a_u;
                grad += sym * k2 * a_u;
            }
            FilterErrorRow {
                beta,
                lhs: lhs.sqrt(),
                equality_rhs: delta * delta * eq.sqrt(),
                laplacian_bound: delta * delta * lap.sqrt(),
                gradient_bound: 0.5 * delta * grad.sqrt(),
            }
        })
        .collect();
    Ok(FilterErrorReport { delta, rows })
}

/// Finite-horizon mean `(1/T)∫₀ᵀ φ dt` by the trapezoidal rule, the
/// surrogate used wherever a long-time average is called for. The series is
/// taken to start at its first sample; `T` is measured from there and linear
/// interpolation closes a partial last interval.
pub fn time_average(series: &[(f64, f64)], horizon: f64) -> Result<f64> {
    let Some(&(t0, _)) = series.first() else {
        return Err(Error::HorizonExceeded {
            requested: horizon,
            available: f64::NAN,
        });
    };
    let t_last = series.last().map(|s| s.0).unwrap_or(t0);
    let tol = 1e-9 * horizon.abs().max(1.0);
    if !(horizon > 0.0) || t0 + horizon > t_last + tol {
        return Err(Error::HorizonExceeded {
            requested: horizon,
            available: t_last - t0,
        });
    }
    let end = (t0 + horizon).min(t_last);
    let mut acc = 0.0;
    for w in series.windows(2) {
        let ((ta, a), (tb, b)) = (w[0], w[1]);
        if ta >= end {
            break;
        }
        if tb <= end {
            acc += 0.5 * (tb - ta) * (a + b);
        } else {
            let s = (end - ta) / (tb - ta);
            let mid = a + s * (b - a);
            acc += 0.5 * (end - ta) * (a + mid);
            break;
        }
    }
    Ok(acc / horizon)
}

/// `∫ φ dt` over the whole series by the trapezoidal rule.
pub fn trapezoid(series: &[(f64, f64)]) -> f64 {
    series
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Distances between a model trajectory and a reference trajectory, in the
/// volume-normalized norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelError {
    /// `‖w − v‖` at the final snapshot.
    pub l2_final: f64,
    /// `(∫₀ᵀ ‖w − v‖² dt)^{1/2}`.
    pub l2l2: f64,
    /// `⟨‖∇(w − v)‖²⟩^{1/2}` over the trajectory horizon.
    pub h1_timeavg: f64,
    pub horizon: f64,
}

/// Requires equal snapshot counts, identical grids and matching times.
pub fn model_error(model: &Trajectory, reference: &Trajectory) -> Result<ModelError> {
    if model.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} model snapshots against {} reference snapshots",
            model.len(),
            reference.len()
        )));
    }
    if model.is_empty() {
        return Err(Error::GridMismatch("empty trajectories".into()));
    }
    let mut l2 = Vec::with_capacity(model.len());
    let mut h1 = Vec::with_capacity(model.len());
    for (w, v) in model.snapshots.iter().zip(&reference.snapshots) {
        check_same_grid(w.grid(), v.grid())?;
        if (w.time - v.time).abs() > 1e-9 * w.time.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "snapshot times differ: {} vs {}",
                w.time, v.time
            )));
        }
        let d = w.sub(v);
        l2.push((w.time, d.norm_sq()));
        h1.push((w.time, hs_norm(&d, 1.0).powi(2)));
    }
    let t0 = l2[0].0;
    let t1 = l2[l2.len() - 1].0;
    let horizon = t1 - t0;
    let h1_timeavg = if horizon > 0.0 {
        time_average(&h1, horizon)?.sqrt()
    } else {
        h1[0].1.sqrt()
    };
    Ok(ModelError {
        l2_final: l2[l2.len() - 1].1.sqrt(),
        l2l2: trapezoid(&l2).sqrt(),
        h1_timeavg,
        horizon,
    })
}

pub(crate) fn check_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::GridMismatch(format!("n = {} vs n = {}", a.n(), b.n())));
    }
    Ok(())
}

/// Reference scales of a run and the consistency estimate in Reynolds
/// form, all over the finite horizon `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReynoldsScales {
    pub length: f64,
    /// `U = ⟨(1/L³)∫|v|²⟩^{1/2}`.
    pub velocity: f64,
    pub reynolds: f64,
    /// `⟨ε⟩`, `ε = (ν/L³)∫|∇v|²`.
    pub eps_avg: f64,
    pub horizon: f64,
    pub delta: f64,
    /// Measured `⟨(1/(U²L³))∫|τ_0|⟩` over the stored snapshots.
    pub tau_normalized: f64,
    /// `(δ/L) Re^{1/2} / U^{1/2}`.
    pub scaling_estimate: f64,
    /// `(δ/√ν) ε^{1/2} U^{1/2} / U²`, the same estimate before `ε ≈ U³/L`.
    pub dissipation_estimate: f64,
}

/// Builds [`ReynoldsScales`] from a completed run; `delta` sets the filter
/// used for `τ_0` (for a model run, its own `δ`).
pub fn reynolds_report(run: &RunOutput, config: &SolverConfig, delta: f64) -> Result<ReynoldsScales> {
    let recs = &run.records;
    let (Some(first), Some(last)) = (recs.first(), recs.last()) else {
        return Err(Error::HorizonExceeded {
            requested: config.t_end,
            available: 0.0,
        });
    };
    let horizon = last.t - first.t;
    let mean = |f: &dyn Fn(&DiagRecord) -> f64| -> Result<f64> {
        if horizon > 0.0 {
            let s: Vec<(f64, f64)> = recs.iter().map(|r| (r.t, f(r))).collect();
            time_average(&s, horizon)
        } else {
            Ok(f(first))
        }
    };
    let velocity = mean(&|r| 2.0 * r.energy)?.sqrt();
    let eps_avg = mean(&|r| r.dissipation)?;
    let length = BOX_LENGTH;
    let nu = config.nu;
    let reynolds = velocity * length / nu;

    let spec = FilterSpec::new(delta, 0)?;
    let u2l3 = velocity * velocity * BOX_VOLUME;
    let tau: Vec<(f64, f64)> = run
        .trajectory
        .snapshots
        .iter()
        .map(|s| (s.time, tau_tensor(s, &spec).l1_norm / u2l3))
        .collect();
    let tau_normalized = match tau.as_slice() {
        [] => f64::NAN,
        [(_, x)] => *x,
        _ => {
            let h = tau[tau.len() - 1].0 - tau[0].0;
            time_average(&tau, h)?
        }
    };
    Ok(ReynoldsScales {
        length,
        velocity,
        reynolds,
        eps_avg,
        horizon,
        delta,
        tau_normalized,
        scaling_estimate: (delta / length) * reynolds.sqrt() / velocity.sqrt(),
        dissipation_estimate: delta / nu.sqrt() * eps_avg.sqrt() * velocity.sqrt() / (velocity * velocity),
    })
}
