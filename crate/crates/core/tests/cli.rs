use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_leray-deconv");

const TG: &str = "\
[grid]
n = 8
[model]
kind = \"leray_deconv\"
delta = 0.5
N = 1
[fluid]
nu = 0.1
[time]
dt = 0.05
t_end = 0.2
snapshot_every = 2
";

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("spawn cli")
}

fn setup() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("tg.toml"), TG).unwrap();
    tmp
}

#[test]
fn run_writes_a_complete_directory() {
    let tmp = setup();
    let out = cli(tmp.path(), &["run", "--config", "tg.toml", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("a");
    for f in ["manifest.toml", "effective_config.toml", "diag.csv", "snapshots/snap_000000.ldsnap"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    assert_eq!(cli(tmp.path(), &["verify", "a"]).status.code(), Some(0));
}

#[test]
fn compare_across_grids_fails_with_message() {
    let tmp = setup();
    assert!(cli(tmp.path(), &["run", "--config", "tg.toml", "--out", "a"]).status.success());
    assert!(cli(tmp.path(), &["run", "--config", "tg.toml", "--set", "grid.n=16", "--out", "b"]).status.success());
    let out = cli(tmp.path(), &["compare", "--model", "a", "--reference", "b"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid mismatch"));
}

#[test]
fn compare_against_nse() {
    let tmp = setup();
    assert!(cli(tmp.path(), &["run", "--config", "tg.toml", "--out", "a"]).status.success());
    assert!(cli(tmp.path(), &["run", "--config", "tg.toml", "--set", "model.kind=nse", "--out", "b"]).status.success());
    let out = cli(tmp.path(), &["compare", "--model", "a", "--reference", "b"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let l2l2: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("l2l2"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(l2l2 > 0.0 && l2l2 < 1.0);
}

#[test]
fn validation_error_exits_one() {
    let tmp = setup();
    let out = cli(tmp.path(), &["run", "--config", "tg.toml", "--set", "fluid.nu=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fluid.nu"));
    let out = cli(tmp.path(), &["run", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn blow_up_exits_two_with_partial_output() {
    let tmp = setup();
    let out = cli(
        tmp.path(),
        &[
            "run", "--config", "tg.toml", "--set", "fluid.nu=0", "--set", "time.dt=5", "--set", "time.t_end=5000",
            "--out", "c",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(tmp.path().join("c/manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"blow_up\""));
}

#[test]
fn transfer_table_values() {
    let tmp = setup();
    let out = cli(
        tmp.path(),
        &["transfer", "--delta", "1", "--orders", "0,1,2", "--kmax", "10", "--points", "11", "--out", "t"],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("t/study.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# leray-deconv study v1 kind=transfer_figures"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("k"), 1.0);
    assert_eq!(col("d_hat_1"), 1.5);
    assert_eq!(col("d_hat_2"), 1.75);
    assert_eq!(col("exact"), 2.0);
}

#[test]
fn cutoff_study_directory() {
    let tmp = setup();
    let out = cli(tmp.path(), &["cutoff", "--max-order", "5", "--out", "k"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert!(cli(tmp.path(), &["verify", "k"]).status.success());
}
