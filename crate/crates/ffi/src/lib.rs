//! C ABI over `leray-deconv`.
//!
//! Conventions:
//!
//! * every fallible function returns an [`LdStatus`]; results go through
//!   out-pointers, which are written only on success (the one exception is
//!   [`ld_run`], which also hands back the partial run on blow-up);
//! * objects are opaque handles created by `ld_*_new`/`ld_*_parse`/... and
//!   released with the matching `ld_*_free`, which accepts NULL;
//! * the message for the most recent failure on the calling thread is
//!   available from [`ld_last_error_message`];
//! * panics never cross the boundary; they surface as `LD_STATUS_PANIC`.
//!
//! The generated header is `include/leray_deconv.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use leray_deconv::diagnostics::DiagRecord;
use leray_deconv::filtering::{self, FilterSpec};
use leray_deconv::io::{self, snapshot, RunConfig};
use leray_deconv::solver::{FieldSpec, ModelKind, RunOutput, Solver};
use leray_deconv::spectral::{self, random, Complex64, Grid, SpectralField};
use leray_deconv::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Configuration value out of range or missing; see the message for the key.
    Validation = 3,
    UnknownKey = 4,
    Parse = 5,
    GridMismatch = 6,
    /// Non-finite state during time stepping.
    BlowUp = 7,
    Io = 8,
    /// Malformed or unsupported file.
    Format = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> LdStatus {
    match e {
        Error::InvalidGrid(_)
        | Error::ShapeMismatch { .. }
        | Error::InvalidParameter { .. }
        | Error::OrderTooLarge { .. }
        | Error::HorizonExceeded { .. } => LdStatus::InvalidArgument,
        Error::GridMismatch(_) => LdStatus::GridMismatch,
        Error::BlowUp { .. } => LdStatus::BlowUp,
        Error::Parse { .. } => LdStatus::Parse,
        Error::Validation { .. } => LdStatus::Validation,
        Error::UnknownKey(_) => LdStatus::UnknownKey,
        Error::Format(_) => LdStatus::Format,
        Error::Io { .. } => LdStatus::Io,
    }
}

fn fail(e: Error) -> LdStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, converting panics into `LdStatus::Panic`.
fn guard(f: impl FnOnce() -> LdStatus) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LdStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is NULL"));
            return LdStatus::NullPointer;
        })+
    };
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, LdStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is NULL"));
        return Err(LdStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        LdStatus::InvalidArgument
    })
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf` and returns the full message length in bytes, excluding the NUL.
/// Passing `buf = NULL` or `len = 0` only queries the length.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ld_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn ld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------- filters

/// Differential filter of radius δ with deconvolution order N.
pub struct LdFilter {
    spec: FilterSpec,
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ld_filter_new(delta: f64, order: u32, out: *mut *mut LdFilter) -> LdStatus {
    guard(|| {
        non_null!(out);
        match FilterSpec::new(delta, order) {
            Ok(spec) => {
                *out = boxed(LdFilter { spec });
                LdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `filter` must be NULL or a handle from [`ld_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ld_filter_free(filter: *mut LdFilter) {
    release(filter)
}

/// Which transfer function [`ld_transfer`] evaluates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdTransfer {
    /// Filter `1/(1 + δ²k²)`.
    G = 0,
    /// Order-N van Cittert deconvolution.
    Dn = 1,
    /// Residual power `G·D_N`.
    Hn = 2,
    /// `1 − H_N`.
    DeconvError = 3,
    /// Exact inverse `1 + δ²k²`.
    Exact = 4,
}

/// Evaluates a transfer function at wavenumber magnitude `k`.
///
/// # Safety
/// `filter` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_transfer(filter: *const LdFilter, which: LdTransfer, k: f64, out: *mut f64) -> LdStatus {
    guard(|| {
        non_null!(filter, out);
        if !(k >= 0.0) {
            set_error("k must be a nonnegative number");
            return LdStatus::InvalidArgument;
        }
        let s = &(*filter).spec;
        *out = match which {
            LdTransfer::G => filtering::transfer_g(k, s),
            LdTransfer::Dn => filtering::transfer_dn(k, s),
            LdTransfer::Hn => filtering::transfer_hn(k, s),
            LdTransfer::DeconvError => filtering::transfer_deconv_error(k, s),
            LdTransfer::Exact => filtering::transfer_exact_deconv(k, s),
        };
        LdStatus::Ok
    })
}

/// Cutoff wavenumber `k*` (root of `Ĥ_N = 1/2`) and its integer floor `k_c`.
///
/// # Safety
/// `filter` must be a live handle; `k_star` and `k_c` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_cutoff(filter: *const LdFilter, k_star: *mut f64, k_c: *mut u64) -> LdStatus {
    guard(|| {
        non_null!(filter, k_star, k_c);
        let s = &(*filter).spec;
        *k_star = filtering::cutoff_wavenumber(s);
        *k_c = filtering::cutoff_frequency(s);
        LdStatus::Ok
    })
}

// ---------------------------------------------------------------- fields

/// Real vector field on the n³ periodic grid, held as Fourier coefficients.
pub struct LdField {
    field: SpectralField,
}

fn grid_of(n: usize) -> Result<Grid, LdStatus> {
    Grid::new(n).map_err(fail)
}

/// Zero field on the `n³` grid (`n` even, at least 4).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_zeros(n: usize, out: *mut *mut LdField) -> LdStatus {
    guard(|| {
        non_null!(out);
        match grid_of(n) {
            Ok(g) => {
                *out = boxed(LdField {
                    field: SpectralField::zeros(g),
                });
                LdStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Taylor–Green vortex `A (sin x cos y cos z, −cos x sin y cos z, 0)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_taylor_green(n: usize, amplitude: f64, out: *mut *mut LdField) -> LdStatus {
    guard(|| {
        non_null!(out);
        let g = match grid_of(n) {
            Ok(g) => g,
            Err(s) => return s,
        };
        match (FieldSpec::TaylorGreen { amplitude }).generate(g) {
            Ok(field) => {
                *out = boxed(LdField { field });
                LdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Seeded random solenoidal field with spectrum `~ k^slope` on
/// `1 ≤ |k|_∞ ≤ kmax` and root-mean-square speed `amplitude`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_random(
    n: usize,
    kmax: i64,
    slope: f64,
    amplitude: f64,
    seed: u64,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        non_null!(out);
        match grid_of(n) {
            Ok(g) => {
                *out = boxed(LdField {
                    field: random::random_solenoidal(g, kmax, slope, amplitude, seed),
                });
                LdStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_field_free(field: *mut LdField) {
    release(field)
}

/// Grid size `n`, or 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_field_n(field: *const LdField) -> usize {
    field.as_ref().map_or(0, |f| f.field.grid().n())
}

/// Time stamp carried by the field, or NaN for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_field_time(field: *const LdField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.field.time)
}

/// Kinetic energy `½ · mean |w|²`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_energy(field: *const LdField, out: *mut f64) -> LdStatus {
    guard(|| {
        non_null!(field, out);
        *out = spectral::energy(&(*field).field);
        LdStatus::Ok
    })
}

/// Sobolev norm `(Σ |k|^{2s} |ŵ_k|²)^{1/2}`.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_hs_norm(field: *const LdField, s: f64, out: *mut f64) -> LdStatus {
    guard(|| {
        non_null!(field, out);
        if !s.is_finite() {
            set_error("s must be finite");
            return LdStatus::InvalidArgument;
        }
        *out = spectral::hs_norm(&(*field).field, s);
        LdStatus::Ok
    })
}

/// Reads coefficient `ŵ_k` as three `(re, im)` pairs into `re[3]`, `im[3]`.
///
/// # Safety
/// `field` must be a live handle; `k` readable for 3 values; `re`, `im`
/// writable for 3 values each.
#[no_mangle]
pub unsafe extern "C" fn ld_field_get_mode(
    field: *const LdField,
    k: *const i64,
    re: *mut f64,
    im: *mut f64,
) -> LdStatus {
    guard(|| {
        non_null!(field, k, re, im);
        let kv = [*k, *k.add(1), *k.add(2)];
        match (*field).field.get(kv) {
            Some(c) => {
                for (j, z) in c.iter().enumerate() {
                    *re.add(j) = z.re;
                    *im.add(j) = z.im;
                }
                LdStatus::Ok
            }
            None => {
                set_error(format!("wavevector {kv:?} is not on the grid"));
                LdStatus::InvalidArgument
            }
        }
    })
}

/// Sets `ŵ_k` and its conjugate partner so the field stays real.
///
/// # Safety
/// `field` must be a live handle; `k`, `re`, `im` readable for 3 values.
#[no_mangle]
pub unsafe extern "C" fn ld_field_set_mode(
    field: *mut LdField,
    k: *const i64,
    re: *const f64,
    im: *const f64,
) -> LdStatus {
    guard(|| {
        non_null!(field, k, re, im);
        let kv = [*k, *k.add(1), *k.add(2)];
        let amp = [0, 1, 2].map(|j| Complex64::new(*re.add(j), *im.add(j)));
        match (*field).field.set_mode(kv, amp) {
            Ok(()) => LdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// New field `H_N w`.
///
/// # Safety
/// `field`, `filter` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_apply_hn(
    field: *const LdField,
    filter: *const LdFilter,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        non_null!(field, filter, out);
        *out = boxed(LdField {
            field: filtering::apply_hn(&(*field).field, &(*filter).spec),
        });
        LdStatus::Ok
    })
}

/// New field `D_N w`.
///
/// # Safety
/// `field`, `filter` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_field_apply_dn(
    field: *const LdField,
    filter: *const LdFilter,
    out: *mut *mut LdField,
) -> LdStatus {
    guard(|| {
        non_null!(field, filter, out);
        *out = boxed(LdField {
            field: filtering::apply_dn(&(*field).field, &(*filter).spec),
        });
        LdStatus::Ok
    })
}

/// Writes a snapshot file. `filter` is NULL for a Navier–Stokes field.
///
/// # Safety
/// `field` must be a live handle, `filter` NULL or live, `path` a
/// NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ld_snapshot_write(
    field: *const LdField,
    filter: *const LdFilter,
    path: *const c_char,
) -> LdStatus {
    guard(|| {
        non_null!(field);
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let f = &(*field).field;
        let header = match filter.as_ref() {
            Some(flt) => snapshot::SnapshotHeader::for_field(
                f,
                ModelKind::LerayDeconvolution(flt.spec.order()),
                Some(flt.spec.delta()),
            ),
            None => snapshot::SnapshotHeader::for_field(f, ModelKind::Nse, None),
        };
        match snapshot::write_snapshot(Path::new(path), f, &header) {
            Ok(()) => LdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Reads a snapshot file into a new field.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_snapshot_read(path: *const c_char, out: *mut *mut LdField) -> LdStatus {
    guard(|| {
        non_null!(out);
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match snapshot::read_snapshot(Path::new(path)) {
            Ok((field, _)) => {
                *out = boxed(LdField { field });
                LdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------- runs

/// Validated run configuration.
pub struct LdConfig {
    config: RunConfig,
}

/// Parses configuration text (the same format the command-line tool reads).
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_config_parse(text: *const c_char, out: *mut *mut LdConfig) -> LdStatus {
    guard(|| {
        non_null!(out);
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match io::parse_config_str(text, "<ffi>", &[]) {
            Ok(config) => {
                *out = boxed(LdConfig { config });
                LdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Applies a `section.key=value` override and revalidates. On failure the
/// configuration is unchanged.
///
/// # Safety
/// `config` must be a live handle and `assignment` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ld_config_set(config: *mut LdConfig, assignment: *const c_char) -> LdStatus {
    guard(|| {
        non_null!(config);
        let a = match str_arg(assignment, "assignment") {
            Ok(a) => a,
            Err(s) => return s,
        };
        let echo = (*config).config.effective_toml();
        match io::parse_config_str(&echo, "<ffi>", &[a.to_string()]) {
            Ok(c) => {
                (*config).config = c;
                LdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_config_free(config: *mut LdConfig) {
    release(config)
}

/// Diagnostics at one instant.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdDiagRecord {
    pub t: f64,
    pub energy: f64,
    pub h1_seminorm_sq: f64,
    pub dissipation: f64,
    pub input_power: f64,
    pub balance_residual: f64,
}

impl From<&DiagRecord> for LdDiagRecord {
    fn from(r: &DiagRecord) -> Self {
        LdDiagRecord {
            t: r.t,
            energy: r.energy,
            h1_seminorm_sq: r.h1_seminorm_sq,
            dissipation: r.dissipation,
            input_power: r.input_power,
            balance_residual: r.balance_residual,
        }
    }
}

/// Completed (or partial) run: diagnostics and retained snapshots.
pub struct LdRun {
    output: RunOutput,
}

/// Integrates `config` in memory. On blow-up returns `LD_STATUS_BLOW_UP`
/// and still stores the partial run in `*out`.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_run(config: *const LdConfig, out: *mut *mut LdRun) -> LdStatus {
    guard(|| {
        non_null!(config, out);
        let solver = match Solver::new((*config).config.solver.clone()) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match solver.run() {
            Ok(output) => {
                *out = boxed(LdRun { output });
                LdStatus::Ok
            }
            Err(f) => {
                *out = boxed(LdRun { output: *f.partial });
                fail(f.error)
            }
        }
    })
}

/// Runs `config` and writes a run directory (configuration echo, diagnostics
/// CSV, snapshots, manifest) to `dir`.
///
/// # Safety
/// `config` must be a live handle and `dir` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ld_run_to_dir(config: *const LdConfig, dir: *const c_char) -> LdStatus {
    guard(|| {
        non_null!(config);
        let dir = match str_arg(dir, "dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        match io::run_to_dir(&(*config).config, Some(Path::new(dir))) {
            Ok(_) => LdStatus::Ok,
            Err(f) => fail(f.error),
        }
    })
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_run_free(run: *mut LdRun) {
    release(run)
}

/// Number of diagnostic records (one per step plus `t = 0`), or 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_run_record_count(run: *const LdRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.records.len())
}

/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_run_record(run: *const LdRun, index: usize, out: *mut LdDiagRecord) -> LdStatus {
    guard(|| {
        non_null!(run, out);
        let run = &*run;
        match run.output.records.get(index) {
            Some(r) => {
                *out = r.into();
                LdStatus::Ok
            }
            None => {
                set_error(format!("record {index} out of range"));
                LdStatus::InvalidArgument
            }
        }
    })
}

/// Number of retained snapshots, or 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_run_snapshot_count(run: *const LdRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.trajectory.len())
}

/// Copy of snapshot `index` as a new field.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_run_snapshot(run: *const LdRun, index: usize, out: *mut *mut LdField) -> LdStatus {
    guard(|| {
        non_null!(run, out);
        let run = &*run;
        match run.output.trajectory.snapshots.get(index) {
            Some(f) => {
                *out = boxed(LdField { field: f.clone() });
                LdStatus::Ok
            }
            None => {
                set_error(format!("snapshot {index} out of range"));
                LdStatus::InvalidArgument
            }
        }
    })
}
