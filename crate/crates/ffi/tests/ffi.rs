use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use leray_deconv_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        ld_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

const CONFIG: &str = "[grid]\nn = 8\n[model]\nkind = \"leray_deconv\"\ndelta = 0.5\nN = 2\n\
                      [fluid]\nnu = 0.1\n[time]\ndt = 0.05\nt_end = 0.2\nsnapshot_every = 2\n";

#[test]
fn transfer_values_and_cutoff() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ld_filter_new(1.0, 2, &mut f), LdStatus::Ok);
        let mut v = 0.0;
        assert_eq!(ld_transfer(f, LdTransfer::Dn, 1.0, &mut v), LdStatus::Ok);
        assert_eq!(v, 1.75);
        assert_eq!(ld_transfer(f, LdTransfer::Hn, 0.0, &mut v), LdStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(ld_transfer(f, LdTransfer::Hn, -1.0, &mut v), LdStatus::InvalidArgument);
        ld_filter_free(f);

        let mut f = ptr::null_mut();
        assert_eq!(ld_filter_new(0.25, 0, &mut f), LdStatus::Ok);
        let (mut ks, mut kc) = (0.0, 0u64);
        assert_eq!(ld_cutoff(f, &mut ks, &mut kc), LdStatus::Ok);
        assert_eq!(kc, 4);
        assert!((ks - 4.0).abs() < 1e-9);
        ld_filter_free(f);
    }
}

#[test]
fn bad_arguments_set_status_and_message() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(ld_filter_new(-1.0, 0, &mut f), LdStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ld_filter_new(1.0, 0, ptr::null_mut()), LdStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut field = ptr::null_mut();
        assert_eq!(ld_field_zeros(7, &mut field), LdStatus::InvalidArgument);
        ld_field_free(ptr::null_mut());
        assert_eq!(ld_field_n(ptr::null()), 0);
    }
}

#[test]
fn field_modes_filters_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("w.ldsnap").to_str().unwrap()).unwrap();
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(ld_field_zeros(8, &mut w), LdStatus::Ok);
        let k = [1i64, 0, 0];
        let re = [0.0, 0.0, 1.0];
        let im = [0.0; 3];
        assert_eq!(ld_field_set_mode(w, k.as_ptr(), re.as_ptr(), im.as_ptr()), LdStatus::Ok);
        let mut e = 0.0;
        assert_eq!(ld_field_energy(w, &mut e), LdStatus::Ok);
        // mode and conjugate: mean |w|² = 2
        assert!((e - 1.0).abs() < 1e-15);

        let mut flt = ptr::null_mut();
        assert_eq!(ld_filter_new(1.0, 0, &mut flt), LdStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(ld_field_apply_hn(w, flt, &mut h), LdStatus::Ok);
        let (mut r, mut i) = ([0.0; 3], [0.0; 3]);
        assert_eq!(ld_field_get_mode(h, k.as_ptr(), r.as_mut_ptr(), i.as_mut_ptr()), LdStatus::Ok);
        assert!((r[2] - 0.5).abs() < 1e-15);

        assert_eq!(ld_snapshot_write(h, flt, path.as_ptr()), LdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ld_snapshot_read(path.as_ptr(), &mut back), LdStatus::Ok);
        let mut r2 = [0.0; 3];
        ld_field_get_mode(back, k.as_ptr(), r2.as_mut_ptr(), i.as_mut_ptr());
        assert_eq!(r2, r);

        let missing = CString::new("/nonexistent/dir/x.ldsnap").unwrap();
        assert_eq!(ld_snapshot_read(missing.as_ptr(), &mut back), LdStatus::Io);
        for f in [w, h, back] {
            ld_field_free(f);
        }
        ld_filter_free(flt);
    }
}

#[test]
fn run_in_memory_and_to_directory() {
    let text = CString::new(CONFIG).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ld_config_parse(text.as_ptr(), &mut cfg), LdStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(ld_run(cfg, &mut run), LdStatus::Ok);
        assert_eq!(ld_run_record_count(run), 5);
        let mut rec = std::mem::zeroed::<LdDiagRecord>();
        assert_eq!(ld_run_record(run, 4, &mut rec), LdStatus::Ok);
        assert!((rec.t - 0.2).abs() < 1e-12);
        assert!(rec.balance_residual.abs() < 1e-8);
        assert_eq!(ld_run_record(run, 5, &mut rec), LdStatus::InvalidArgument);
        assert_eq!(ld_run_snapshot_count(run), 3);
        let mut last = ptr::null_mut();
        assert_eq!(ld_run_snapshot(run, 2, &mut last), LdStatus::Ok);
        assert!((ld_field_time(last) - 0.2).abs() < 1e-12);
        ld_field_free(last);
        ld_run_free(run);

        assert_eq!(ld_run_to_dir(cfg, dir.as_ptr()), LdStatus::Ok);
        assert!(tmp.path().join("manifest.toml").is_file());

        let bad = CString::new("fluid.nu=-1").unwrap();
        assert_eq!(ld_config_set(cfg, bad.as_ptr()), LdStatus::Validation);
        assert!(last_error().contains("fluid.nu"));
        let unknown = CString::new("fluid.mu=1").unwrap();
        assert_eq!(ld_config_set(cfg, unknown.as_ptr()), LdStatus::UnknownKey);

        let blow = ["fluid.nu=0", "time.t_end=5000", "time.dt=5"].map(|s| CString::new(s).unwrap());
        for b in &blow {
            assert_eq!(ld_config_set(cfg, b.as_ptr()), LdStatus::Ok);
        }
        let mut run = ptr::null_mut();
        assert_eq!(ld_run(cfg, &mut run), LdStatus::BlowUp);
        assert!(!run.is_null());
        assert!(ld_run_record_count(run) >= 1);
        ld_run_free(run);
        ld_config_free(cfg);
    }
}

#[test]
fn config_parse_errors() {
    let text = CString::new("[grid]\nn = = 8\n").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ld_config_parse(text.as_ptr(), &mut cfg), LdStatus::Parse);
        assert!(cfg.is_null());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ld_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/leray_deconv.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_the_abi() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct LdField LdField;",
        "LD_STATUS_BLOW_UP = 7",
        "LdStatus ld_run(const LdConfig *config, LdRun **out);",
        "size_t ld_last_error_message(char *buf, size_t len);",
    ] {
        assert!(text.contains(name), "missing `{name}`");
    }
    if have_cc() {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
            .arg(header())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "leray_deconv.h"

int main(void) {
    LdFilter *f = NULL;
    double d = 0.0;
    if (ld_filter_new(1.0, 1, &f) != LD_STATUS_OK) return 1;
    if (ld_transfer(f, LD_TRANSFER_DN, 1.0, &d) != LD_STATUS_OK) return 2;
    ld_filter_free(f);
    if (ld_filter_new(-1.0, 1, &f) != LD_STATUS_INVALID_ARGUMENT) return 3;
    char msg[256];
    ld_last_error_message(msg, sizeof msg);
    printf("%.17g|%s\n", d, msg);
    return 0;
}
"#;

/// Links a C program against the static library when both a C compiler and
/// the archive are available.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libleray_deconv_ffi.a");
    if !have_cc() || !lib.is_file() {
        eprintln!("skipping: cc or {} unavailable", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    let exe = tmp.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    let (value, msg) = text.trim().split_once('|').unwrap();
    assert_eq!(value, "1.5");
    assert!(msg.contains("delta"), "{msg}");
}
