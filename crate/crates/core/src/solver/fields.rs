use crate::error::{Error, Result};
use crate::spectral::{leray_project_in_place, random, Complex64, FftPlan, Grid, PhysicalField, SpectralField};

/// Closed-form fields usable as initial data or forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    /// Arnold–Beltrami–Childress flow with A = B = C = amplitude.
    Abc,
    /// Shear `(amplitude·sin y, 0, 0)`.
    Kolmogorov,
}

impl Manufactured {
    pub fn name(&self) -> &'static str {
        match self {
            Manufactured::Abc => "abc",
            Manufactured::Kolmogorov => "kolmogorov",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "abc" => Some(Manufactured::Abc),
            "kolmogorov" => Some(Manufactured::Kolmogorov),
            _ => None,
        }
    }
}

/// Descriptor of a solenoidal, zero-mean, real vector field. Used for both the
/// initial condition and the (time-independent) body force.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// `A (sin x cos y cos z, −cos x sin y cos z, 0)`.
    TaylorGreen { amplitude: f64 },
    /// `A d cos(k·x)` with unit `d ⊥ k`. Without an explicit direction, `d` is
    /// the coordinate axis least aligned with `k`, made orthogonal to `k`.
    SingleMode {
        wavevector: [i64; 3],
        amplitude: f64,
        direction: Option<[f64; 3]>,
    },
    /// Gaussian coefficients with energy spectrum `~ k^{slope}` on
    /// `1 ≤ |k|_∞ ≤ kmax`, scaled so that the volume-mean of `|w|²` equals
    /// `amplitude²`.
    RandomSolenoidal {
        amplitude: f64,
        spectrum_slope: f64,
        kmax: i64,
        seed: u64,
    },
    Manufactured { expression: Manufactured, amplitude: f64 },
}

pub type ForcingSpec = FieldSpec;
pub type InitialConditionSpec = FieldSpec;

impl FieldSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FieldSpec::Zero => "zero",
            FieldSpec::TaylorGreen { .. } => "taylor_green",
            FieldSpec::SingleMode { .. } => "single_mode",
            FieldSpec::RandomSolenoidal { .. } => "random_solenoidal",
            FieldSpec::Manufactured { .. } => "manufactured",
        }
    }

    pub fn generate(&self, grid: Grid) -> Result<SpectralField> {
        match self {
            FieldSpec::Zero => Ok(SpectralField::zeros(grid)),
            FieldSpec::TaylorGreen { amplitude } => {
                let a = *amplitude;
                sample(grid, |x| {
                    [
                        a * x[0].sin() * x[1].cos() * x[2].cos(),
                        -a * x[0].cos() * x[1].sin() * x[2].cos(),
                        0.0,
                    ]
                })
            }
            FieldSpec::SingleMode {
                wavevector,
                amplitude,
                direction,
            } => single_mode(grid, *wavevector, *amplitude, *direction),
            FieldSpec::RandomSolenoidal {
                amplitude,
                spectrum_slope,
                kmax,
                seed,
            } => {
                if *kmax < 1 {
                    return Err(Error::param("kmax", "must be at least 1"));
                }
                Ok(random::random_solenoidal(
                    grid,
                    *kmax,
                    *spectrum_slope,
                    *amplitude,
                    *seed,
                ))
            }
            FieldSpec::Manufactured {
                expression,
                amplitude,
            } => {
                let a = *amplitude;
                match expression {
                    Manufactured::Abc => sample(grid, |x| {
                        [
                            a * (x[2].sin() + x[1].cos()),
                            a * (x[0].sin() + x[2].cos()),
                            a * (x[1].sin() + x[0].cos()),
                        ]
                    }),
                    Manufactured::Kolmogorov => sample(grid, |x| [a * x[1].sin(), 0.0, 0.0]),
                }
            }
        }
    }
}

fn sample(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<SpectralField> {
    let plan = FftPlan::for_grid(grid);
    let mut p = PhysicalField::zeros(grid.n());
    for idx in 0..grid.len() {
        let v = f(p.position(idx));
        for c in 0..3 {
            p.comps[c][idx] = v[c];
        }
    }
    let mut out = plan.from_physical(grid, &p)?;
    // remove roundoff-level divergence from the sampled expression
    leray_project_in_place(&mut out);
    Ok(out)
}

fn single_mode(
    grid: Grid,
    k: [i64; 3],
    amplitude: f64,
    direction: Option<[f64; 3]>,
) -> Result<SpectralField> {
    let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    if k2 == 0.0 {
        return Err(Error::param("wavevector", "must be nonzero"));
    }
    let kh = k.map(|c| c as f64 / k2.sqrt());
    let seed_dir = direction.unwrap_or_else(|| {
        let mut axis = 0;
        for j in 1..3 {
            if k[j].abs() < k[axis].abs() {
                axis = j;
            }
        }
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        e
    });
    let dot = seed_dir[0] * kh[0] + seed_dir[1] * kh[1] + seed_dir[2] * kh[2];
    let mut d = [0, 1, 2].map(|c| seed_dir[c] - dot * kh[c]);
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if norm < 1e-12 {
        return Err(Error::param("direction", "must not be parallel to the wavevector"));
    }
    for c in d.iter_mut() {
        *c /= norm;
    }
    let mut f = SpectralField::zeros(grid);
    f.set_mode(k, d.map(|c| Complex64::new(0.5 * amplitude * c, 0.0)))?;
    Ok(f)
}

/// Energy `A²/8` of the Taylor–Green field of amplitude `A`.
pub fn taylor_green_energy(amplitude: f64) -> f64 {
    amplitude * amplitude / 8.0
}
