//! Time integration of the Navier–Stokes equations and the Leray-deconvolution
//! family `∂_t w + (H_N w · ∇) w − νΔw + ∇q = f_eff` in solenoidal spectral
//! form. `LerayDeconvolution(0)` is the Leray-alpha model.
//!
//! The viscous term is integrated exactly by the factor `e^{−ν|k|²t}`; the
//! projected, dealiased advection and the forcing are advanced by Williamson's
//! low-storage third-order Runge–Kutta scheme in integrating-factor form.

mod fields;

use std::time::Instant;

use crate::diagnostics::{DiagRecord, EnergyBalance};
use crate::error::{Error, Result};
use crate::filtering::{apply_hn_iterative, transfer_hn, FilterSpec};
use crate::spectral::{
    hs_norm, leray_project_in_place, Complex64, FftPlan, Grid, ScalarField, SpectralField,
};

pub use fields::{taylor_green_energy, FieldSpec, ForcingSpec, InitialConditionSpec, Manufactured};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nse,
    /// Leray-deconvolution model of order `N`; `N = 0` is Leray-alpha.
    LerayDeconvolution(u32),
}

impl ModelKind {
    pub fn tag(&self) -> u32 {
        match self {
            ModelKind::Nse => 0,
            ModelKind::LerayDeconvolution(_) => 1,
        }
    }

    pub fn order(&self) -> Option<u32> {
        match self {
            ModelKind::Nse => None,
            ModelKind::LerayDeconvolution(n) => Some(*n),
        }
    }
}

/// Discrete form of the quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionForm {
    /// `(u·∇) w`
    #[default]
    Advective,
    /// `∇·(u ⊗ w)`
    Divergence,
}

/// How the advecting velocity `H_N w` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HnEvaluation {
    /// One diagonal multiply by `Ĥ_N`.
    #[default]
    ClosedForm,
    /// Filter, then `N` van Cittert steps.
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: Grid,
    pub model: ModelKind,
    /// Required for the deconvolution models; its order must match `model`.
    pub filter: Option<FilterSpec>,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: ForcingSpec,
    pub ic: InitialConditionSpec,
    /// Drive the model with `H_N f` instead of `f`.
    pub filter_forcing: bool,
    /// Start the model from `H_N v₀` instead of `v₀`.
    pub filter_ic: bool,
    pub dealias: bool,
    pub advection: AdvectionForm,
    pub hn_evaluation: HnEvaluation,
    /// Store a snapshot every this many steps; 0 keeps only the initial and
    /// final states.
    pub snapshot_every: usize,
}

impl SolverConfig {
    /// Unforced Taylor–Green problem with the documented defaults.
    pub fn taylor_green(n: usize, model: ModelKind, delta: Option<f64>, nu: f64, dt: f64, t_end: f64) -> Result<Self> {
        let filter = match (model, delta) {
            (ModelKind::Nse, _) => None,
            (ModelKind::LerayDeconvolution(order), Some(d)) => Some(FilterSpec::new(d, order)?),
            (ModelKind::LerayDeconvolution(_), None) => {
                return Err(Error::validation("model.delta", "is required for leray_deconv"))
            }
        };
        let cfg = SolverConfig {
            grid: Grid::new(n)?,
            model,
            filter,
            nu,
            dt,
            t_end,
            forcing: FieldSpec::Zero,
            ic: FieldSpec::TaylorGreen { amplitude: 1.0 },
            filter_forcing: true,
            filter_ic: true,
            dealias: true,
            advection: AdvectionForm::Advective,
            hn_evaluation: HnEvaluation::ClosedForm,
            snapshot_every: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::validation("fluid.nu", "must be nonnegative and finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("time.dt", "must be positive"));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::validation("time.t_end", "must be at least time.dt"));
        }
        match (self.model, &self.filter) {
            (ModelKind::LerayDeconvolution(_), None) => {
                return Err(Error::validation("model.delta", "is required for leray_deconv"))
            }
            (ModelKind::LerayDeconvolution(n), Some(f)) if f.order() != n => {
                return Err(Error::validation(
                    "model.N",
                    format!("model order {n} disagrees with filter order {}", f.order()),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Filter applied to the advecting velocity, `None` for NSE.
    pub fn advecting_filter(&self) -> Option<FilterSpec> {
        match self.model {
            ModelKind::Nse => None,
            ModelKind::LerayDeconvolution(_) => self.filter,
        }
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Forcing actually seen by the momentum equation.
    pub fn effective_forcing(&self) -> Result<SpectralField> {
        let mut f = self.forcing.generate(self.grid)?;
        if let (Some(spec), true) = (self.advecting_filter(), self.filter_forcing) {
            crate::filtering::apply_hn_in_place(&mut f, &spec);
        }
        if self.dealias {
            f.truncate_to_dealias_band();
        }
        Ok(f)
    }

    /// Initial state actually integrated.
    pub fn effective_initial_state(&self) -> Result<SpectralField> {
        let mut w = self.ic.generate(self.grid)?;
        if let (Some(spec), true) = (self.advecting_filter(), self.filter_ic) {
            crate::filtering::apply_hn_in_place(&mut w, &spec);
        }
        if self.dealias {
            w.truncate_to_dealias_band();
        }
        w.time = 0.0;
        Ok(w)
    }
}

/// Williamson (1980) 2N-storage RK3: `q ← A_i q + dt F`, `y ← y + B_i q`.
const RK_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
const RK_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
const RK_C: [f64; 4] = [0.0, 1.0 / 3.0, 3.0 / 4.0, 1.0];

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    plan: FftPlan,
    forcing: SpectralField,
    hn: Option<Vec<f64>>,
    band: Vec<bool>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let forcing = config.effective_forcing()?;
        let hn = config.advecting_filter().map(|spec| {
            (0..grid.len())
                .map(|idx| transfer_hn(grid.k2(idx).sqrt(), &spec))
                .collect()
        });
        let band = (0..grid.len()).map(|idx| grid.in_dealias_band(idx)).collect();
        Ok(Solver {
            plan: FftPlan::for_grid(grid),
            config,
            forcing,
            hn,
            band,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    pub fn forcing(&self) -> &SpectralField {
        &self.forcing
    }

    fn truncate(&self, f: &mut SpectralField) {
        if self.config.dealias {
            let band = &self.band;
            f.apply_diagonal(|idx| if band[idx] { 1.0 } else { 0.0 });
        }
    }

    /// Advecting velocity `u = w` (NSE) or `u = H_N w`.
    pub fn advecting_velocity(&self, w: &SpectralField) -> SpectralField {
        match (self.config.advecting_filter(), self.config.hn_evaluation) {
            (None, _) => w.clone(),
            (Some(spec), HnEvaluation::Iterative) => apply_hn_iterative(w, &spec),
            (Some(_), HnEvaluation::ClosedForm) => {
                let hn = self.hn.as_ref().expect("multiplier table");
                w.map_diagonal(|idx| hn[idx])
            }
        }
    }

    /// Unprojected `(u·∇)w` (or `∇·(u⊗w)`), dealiased when configured.
    fn quadratic(&self, w: &SpectralField) -> SpectralField {
        let mut u = self.advecting_velocity(w);
        let mut w = w.clone();
        self.truncate(&mut u);
        self.truncate(&mut w);
        let mut out = match self.config.advection {
            AdvectionForm::Advective => advective_product(&self.plan, &u, &w),
            AdvectionForm::Divergence => divergence_product(&self.plan, &u, &w),
        };
        self.truncate(&mut out);
        out
    }

    /// Projected, dealiased `−(u·∇)w`.
    pub fn nonlinear_term(&self, w: &SpectralField) -> SpectralField {
        let mut out = self.quadratic(w);
        out.apply_diagonal(|_| -1.0);
        leray_project_in_place(&mut out);
        out.time = w.time;
        out
    }

    /// Right-hand side without the viscous term.
    pub fn rhs(&self, w: &SpectralField) -> SpectralField {
        let mut r = self.nonlinear_term(w);
        r.axpy(1.0, &self.forcing);
        r
    }

    fn decay(&self, w: &mut SpectralField, tau: f64) {
        if self.config.nu == 0.0 || tau == 0.0 {
            return;
        }
        let g = self.config.grid;
        let a = -self.config.nu * tau;
        w.apply_diagonal(|idx| (a * g.k2(idx)).exp());
    }

    /// Advances `state` by `dt`.
    pub fn step_by(&self, state: &SpectralField, dt: f64) -> SpectralField {
        self.step_with_budget(state, dt).0
    }

    /// As [`Solver::step_by`], also returning the step's increments of
    /// `∫ν‖∇w‖²` and `∫⟨f_eff, w⟩`. Both integrals are carried as extra
    /// unknowns of the same Runge–Kutta scheme, so they share its order.
    pub fn step_with_budget(&self, state: &SpectralField, dt: f64) -> (SpectralField, f64, f64) {
        let mut w = state.clone();
        let mut q = SpectralField::zeros(self.config.grid);
        let (mut qd, mut qp) = (0.0, 0.0);
        let (mut dissipated, mut injected) = (0.0, 0.0);
        for stage in 0..3 {
            let f = self.rhs(&w);
            let d = self.config.nu * hs_norm(&w, 1.0).powi(2);
            let p = self.forcing.inner(&w);
            if stage == 0 {
                q = f.scaled(dt);
            } else {
                q.apply_diagonal(|_| RK_A[stage]);
                q.axpy(dt, &f);
            }
            qd = RK_A[stage] * qd + dt * d;
            qp = RK_A[stage] * qp + dt * p;
            dissipated += RK_B[stage] * qd;
            injected += RK_B[stage] * qp;
            w.axpy(RK_B[stage], &q);
            let tau = (RK_C[stage + 1] - RK_C[stage]) * dt;
            self.decay(&mut w, tau);
            if stage < 2 {
                self.decay(&mut q, tau);
            }
        }
        w.time = state.time + dt;
        (w, dissipated, injected)
    }

    pub fn step(&self, state: &SpectralField) -> SpectralField {
        self.step_by(state, self.config.dt)
    }

    /// Pressure `q̂ = −i k·R̂/|k|²` from the unprojected advection-plus-forcing
    /// term `R`, so that `R − ∇q` is solenoidal.
    pub fn recover_pressure(&self, w: &SpectralField) -> ScalarField {
        let mut r = self.quadratic(w);
        r.apply_diagonal(|_| -1.0);
        r.axpy(1.0, &self.forcing);
        unprojected_pressure(&r)
    }

    /// Stable step estimate `Δx / max|u|` for the given state.
    pub fn cfl_advisory(&self, w: &SpectralField) -> CflAdvisory {
        let speed = self
            .plan
            .to_physical(w)
            .map(|p| p.max_speed())
            .unwrap_or(0.0);
        let dt_max = if speed > 0.0 {
            self.config.grid.spacing() / speed
        } else {
            f64::INFINITY
        };
        CflAdvisory {
            dt: self.config.dt,
            dt_max,
            max_speed: speed,
            violated: self.config.dt > dt_max,
        }
    }

    /// Integrates from `t = 0` to `t_end`.
    pub fn run(&self) -> std::result::Result<RunOutput, RunFailure> {
        let start = Instant::now();
        let cfg = &self.config;
        let mut w = match cfg.effective_initial_state() {
            Ok(w) => w,
            Err(e) => {
                return Err(RunFailure {
                    error: e,
                    partial: Box::new(RunOutput::empty(CflAdvisory::unknown(cfg.dt))),
                })
            }
        };
        let cfl = self.cfl_advisory(&w);
        let mut out = RunOutput::empty(cfl);
        let mut balance = EnergyBalance::new(cfg.nu);
        out.records.push(balance.push(&w, &self.forcing));
        out.trajectory.push(w.clone());

        let steps = cfg.steps();
        for step in 1..=steps {
            let t_prev = (step - 1) as f64 * cfg.dt;
            let t_next = if step == steps { cfg.t_end } else { step as f64 * cfg.dt };
            let (mut next, dissipated, injected) = self.step_with_budget(&w, t_next - t_prev);
            next.time = t_next;
            if !next.is_finite() {
                out.steps = step - 1;
                out.wall_seconds = start.elapsed().as_secs_f64();
                return Err(RunFailure {
                    error: Error::BlowUp { step, time: t_next },
                    partial: Box::new(out),
                });
            }
            w = next;
            out.records.push(balance.push_step(&w, &self.forcing, dissipated, injected));
            let keep = step == steps || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
            if keep {
                out.trajectory.push(w.clone());
            }
        }
        out.steps = steps;
        out.wall_seconds = start.elapsed().as_secs_f64();
        Ok(out)
    }
}

/// `q̂ = −i k·R̂/|k|²`.
pub fn unprojected_pressure(r: &SpectralField) -> ScalarField {
    let g = r.grid();
    let mut q = ScalarField::zeros(g);
    for idx in 1..g.len() {
        let k = g.wavevector(idx);
        let v = r.at(idx);
        let kd = v[0] * k[0] as f64 + v[1] * k[1] as f64 + v[2] * k[2] as f64;
        q.coeffs_mut()[idx] = Complex64::new(0.0, -1.0) * kd / g.k2(idx);
    }
    q
}

/// `Σ_j u_j ∂_j w_i`, products formed in physical space.
pub fn advective_product(plan: &FftPlan, u: &SpectralField, w: &SpectralField) -> SpectralField {
    let g = w.grid();
    let up = plan.to_physical(u).expect("grid checked by caller");
    let len = g.len();
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for i in 0..3 {
        let mut acc = vec![0.0; len];
        for j in 0..3 {
            let wc = w.component(i);
            for idx in 0..len {
                let kj = g.wavevector(idx)[j] as f64;
                buf[idx] = Complex64::new(-kj * wc[idx].im, kj * wc[idx].re);
            }
            plan.inverse_in_place(&mut buf);
            let uj = &up.comps[j];
            for idx in 0..len {
                acc[idx] += uj[idx] * buf[idx].re;
            }
        }
        comps[i] = plan.scalar_from_physical(&acc);
    }
    SpectralField::from_components(g, comps).expect("matching shapes")
}

/// `Σ_j ∂_j (u_j w_i)`, products formed in physical space.
pub fn divergence_product(plan: &FftPlan, u: &SpectralField, w: &SpectralField) -> SpectralField {
    let g = w.grid();
    let up = plan.to_physical(u).expect("grid checked by caller");
    let wp = plan.to_physical(w).expect("grid checked by caller");
    let len = g.len();
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    for i in 0..3 {
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        for j in 0..3 {
            let prod: Vec<f64> = (0..len).map(|x| up.comps[j][x] * wp.comps[i][x]).collect();
            let spec = plan.scalar_from_physical(&prod);
            for idx in 0..len {
                let kj = g.wavevector(idx)[j] as f64;
                acc[idx] += Complex64::new(0.0, kj) * spec[idx];
            }
        }
        comps[i] = acc;
    }
    SpectralField::from_components(g, comps).expect("matching shapes")
}

/// Projected, dealiased `−(u_adv·∇)w` for a standalone state, with
/// `u_adv = w` for NSE and `u_adv = H_N w` otherwise.
pub fn nonlinear_term(state: &SpectralField, model: ModelKind, filter: Option<&FilterSpec>) -> Result<SpectralField> {
    let mut cfg = SolverConfig::taylor_green(state.grid().n(), ModelKind::Nse, None, 0.0, 1.0, 1.0)?;
    cfg.grid = state.grid();
    cfg.model = model;
    cfg.filter = filter.copied();
    let solver = Solver::new(cfg)?;
    Ok(solver.nonlinear_term(state))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflAdvisory {
    pub dt: f64,
    pub dt_max: f64,
    pub max_speed: f64,
    pub violated: bool,
}

impl CflAdvisory {
    pub(crate) fn unknown(dt: f64) -> Self {
        CflAdvisory {
            dt,
            dt_max: f64::NAN,
            max_speed: f64::NAN,
            violated: false,
        }
    }
}

/// Stored states at strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<SpectralField>,
}

impl Trajectory {
    pub fn push(&mut self, f: SpectralField) {
        debug_assert!(self.snapshots.last().is_none_or(|l| l.time < f.time));
        self.snapshots.push(f);
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.snapshots.last()
    }

    pub fn first(&self) -> Option<&SpectralField> {
        self.snapshots.first()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    /// One record per step, including `t = 0`.
    pub records: Vec<DiagRecord>,
    pub cfl: CflAdvisory,
    pub steps: usize,
    pub wall_seconds: f64,
}

impl RunOutput {
    pub(crate) fn empty(cfl: CflAdvisory) -> Self {
        RunOutput {
            trajectory: Trajectory::default(),
            records: Vec::new(),
            cfl,
            steps: 0,
            wall_seconds: 0.0,
        }
    }

    pub fn final_state(&self) -> Option<&SpectralField> {
        self.trajectory.last()
    }
}

/// A run that stopped early; `partial` holds everything computed before the
/// failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    #[source]
    pub error: Error,
    pub partial: Box<RunOutput>,
}

/// Convenience wrapper around [`Solver::run`].
pub fn run(config: &SolverConfig) -> std::result::Result<RunOutput, RunFailure> {
    let solver = Solver::new(config.clone()).map_err(|error| RunFailure {
        error,
        partial: Box::new(RunOutput::empty(CflAdvisory::unknown(config.dt))),
    })?;
    solver.run()
}

/// One step of `config`'s integrator from `state`.
pub fn step(state: &SpectralField, config: &SolverConfig) -> Result<SpectralField> {
    let solver = Solver::new(config.clone())?;
    let next = solver.step(state);
    if !next.is_finite() {
        return Err(Error::BlowUp {
            step: 1,
            time: next.time,
        });
    }
    Ok(next)
}

/// Pressure of `state` under `config`.
pub fn recover_pressure(state: &SpectralField, config: &SolverConfig) -> Result<ScalarField> {
    Ok(Solver::new(config.clone())?.recover_pressure(state))
}
