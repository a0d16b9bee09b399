#ifndef LERAY_DECONV_H
#define LERAY_DECONV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  LD_STATUS_OK = 0,
  LD_STATUS_NULL_POINTER = 1,
  LD_STATUS_INVALID_ARGUMENT = 2,
  // Configuration value out of range or missing; see the message for the key.
  LD_STATUS_VALIDATION = 3,
  LD_STATUS_UNKNOWN_KEY = 4,
  LD_STATUS_PARSE = 5,
  LD_STATUS_GRID_MISMATCH = 6,
  // Non-finite state during time stepping.
  LD_STATUS_BLOW_UP = 7,
  LD_STATUS_IO = 8,
  // Malformed or unsupported file.
  LD_STATUS_FORMAT = 9,
  LD_STATUS_PANIC = 10,
} LdStatus;

// Which transfer function [`ld_transfer`] evaluates.
typedef enum {
  // Filter `1/(1 + δ²k²)`.
  LD_TRANSFER_G = 0,
  // Order-N van Cittert deconvolution.
  LD_TRANSFER_DN = 1,
  // Residual power `G·D_N`.
  LD_TRANSFER_HN = 2,
  // `1 − H_N`.
  LD_TRANSFER_DECONV_ERROR = 3,
  // Exact inverse `1 + δ²k²`.
  LD_TRANSFER_EXACT = 4,
} LdTransfer;

// Validated run configuration.
typedef struct LdConfig LdConfig;

// Real vector field on the n³ periodic grid, held as Fourier coefficients.
typedef struct LdField LdField;

// Differential filter of radius δ with deconvolution order N.
typedef struct LdFilter LdFilter;

// Completed (or partial) run: diagnostics and retained snapshots.
typedef struct LdRun LdRun;

// Diagnostics at one instant.
typedef struct {
  double t;
  double energy;
  double h1_seminorm_sq;
  double dissipation;
  double input_power;
  double balance_residual;
} LdDiagRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message (NUL-terminated, truncated to fit) into
// `buf` and returns the full message length in bytes, excluding the NUL.
// Passing `buf = NULL` or `len = 0` only queries the length.
//
// # Safety
// `buf` must be NULL or point to `len` writable bytes.
size_t ld_last_error_message(char *buf, size_t len);

// Static NUL-terminated version string.
const char *ld_version(void);

// # Safety
// `out` must be a valid pointer to writable storage for one handle.
LdStatus ld_filter_new(double delta, uint32_t order, LdFilter **out);

// # Safety
// `filter` must be NULL or a handle from [`ld_filter_new`] not yet freed.
void ld_filter_free(LdFilter *filter);

// Evaluates a transfer function at wavenumber magnitude `k`.
//
// # Safety
// `filter` must be a live handle and `out` writable.
LdStatus ld_transfer(const LdFilter *filter, LdTransfer which, double k, double *out);

// Cutoff wavenumber `k*` (root of `Ĥ_N = 1/2`) and its integer floor `k_c`.
//
// # Safety
// `filter` must be a live handle; `k_star` and `k_c` writable.
LdStatus ld_cutoff(const LdFilter *filter, double *k_star, uint64_t *k_c);

// Zero field on the `n³` grid (`n` even, at least 4).
//
// # Safety
// `out` must be writable.
LdStatus ld_field_zeros(size_t n, LdField **out);

// Taylor–Green vortex `A (sin x cos y cos z, −cos x sin y cos z, 0)`.
//
// # Safety
// `out` must be writable.
LdStatus ld_field_taylor_green(size_t n, double amplitude, LdField **out);

// Seeded random solenoidal field with spectrum `~ k^slope` on
// `1 ≤ |k|_∞ ≤ kmax` and root-mean-square speed `amplitude`.
//
// # Safety
// `out` must be writable.
LdStatus ld_field_random(size_t n,
                         int64_t kmax,
                         double slope,
                         double amplitude,
                         uint64_t seed,
                         LdField **out);

// # Safety
// `field` must be NULL or a live handle.
void ld_field_free(LdField *field);

// Grid size `n`, or 0 for NULL.
//
// # Safety
// `field` must be NULL or a live handle.
size_t ld_field_n(const LdField *field);

// Time stamp carried by the field, or NaN for NULL.
//
// # Safety
// `field` must be NULL or a live handle.
double ld_field_time(const LdField *field);

// Kinetic energy `½ · mean |w|²`.
//
// # Safety
// `field` must be a live handle and `out` writable.
LdStatus ld_field_energy(const LdField *field, double *out);

// Sobolev norm `(Σ |k|^{2s} |ŵ_k|²)^{1/2}`.
//
// # Safety
// `field` must be a live handle and `out` writable.
LdStatus ld_field_hs_norm(const LdField *field, double s, double *out);

// Reads coefficient `ŵ_k` as three `(re, im)` pairs into `re[3]`, `im[3]`.
//
// # Safety
// `field` must be a live handle; `k` readable for 3 values; `re`, `im`
// writable for 3 values each.
LdStatus ld_field_get_mode(const LdField *field, const int64_t *k, double *re, double *im);

// Sets `ŵ_k` and its conjugate partner so the field stays real.
//
// # Safety
// `field` must be a live handle; `k`, `re`, `im` readable for 3 values.
LdStatus ld_field_set_mode(LdField *field, const int64_t *k, const double *re, const double *im);

// New field `H_N w`.
//
// # Safety
// `field`, `filter` must be live handles and `out` writable.
LdStatus ld_field_apply_hn(const LdField *field, const LdFilter *filter, LdField **out);

// New field `D_N w`.
//
// # Safety
// `field`, `filter` must be live handles and `out` writable.
LdStatus ld_field_apply_dn(const LdField *field, const LdFilter *filter, LdField **out);

// Writes a snapshot file. `filter` is NULL for a Navier–Stokes field.
//
// # Safety
// `field` must be a live handle, `filter` NULL or live, `path` a
// NUL-terminated UTF-8 string.
LdStatus ld_snapshot_write(const LdField *field, const LdFilter *filter, const char *path);

// Reads a snapshot file into a new field.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string and `out` writable.
LdStatus ld_snapshot_read(const char *path, LdField **out);

// Parses configuration text (the same format the command-line tool reads).
//
// # Safety
// `text` must be a NUL-terminated UTF-8 string and `out` writable.
LdStatus ld_config_parse(const char *text, LdConfig **out);

// Applies a `section.key=value` override and revalidates. On failure the
// configuration is unchanged.
//
// # Safety
// `config` must be a live handle and `assignment` a NUL-terminated string.
LdStatus ld_config_set(LdConfig *config, const char *assignment);

// # Safety
// `config` must be NULL or a live handle.
void ld_config_free(LdConfig *config);

// Integrates `config` in memory. On blow-up returns `LD_STATUS_BLOW_UP`
// and still stores the partial run in `*out`.
//
// # Safety
// `config` must be a live handle and `out` writable.
LdStatus ld_run(const LdConfig *config, LdRun **out);

// Runs `config` and writes a run directory (configuration echo, diagnostics
// CSV, snapshots, manifest) to `dir`.
//
// # Safety
// `config` must be a live handle and `dir` a NUL-terminated UTF-8 string.
LdStatus ld_run_to_dir(const LdConfig *config, const char *dir);

// # Safety
// `run` must be NULL or a live handle.
void ld_run_free(LdRun *run);

// Number of diagnostic records (one per step plus `t = 0`), or 0 for NULL.
//
// # Safety
// `run` must be NULL or a live handle.
size_t ld_run_record_count(const LdRun *run);

// # Safety
// `run` must be a live handle and `out` writable.
LdStatus ld_run_record(const LdRun *run, size_t index, LdDiagRecord *out);

// Number of retained snapshots, or 0 for NULL.
//
// # Safety
// `run` must be NULL or a live handle.
size_t ld_run_snapshot_count(const LdRun *run);

// Copy of snapshot `index` as a new field.
//
// # Safety
// `run` must be a live handle and `out` writable.
LdStatus ld_run_snapshot(const LdRun *run, size_t index, LdField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LERAY_DECONV_H */
