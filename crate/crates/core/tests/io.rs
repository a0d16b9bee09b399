use leray_deconv::io::csv::{read_diag_csv, read_study_csv, study_csv_string, write_diag_csv};
use leray_deconv::io::snapshot::{read_snapshot_for, SnapshotHeader};
use leray_deconv::io::{self, parse_config_str, read_snapshot, write_snapshot};
use leray_deconv::experiments::{cutoff_table_study, CutoffSpec};
use leray_deconv::solver::ModelKind;
use leray_deconv::spectral::{random::random_solenoidal, Grid};
use leray_deconv::Error;
use proptest::prelude::*;

const BASE: &str = "\
[grid]
n = 8

[model]
kind = \"leray_deconv\"
delta = 0.3
N = 2

[fluid]
nu = 0.05

[time]
dt = 0.02
t_end = 0.1
snapshot_every = 1

[ic]
kind = \"random_solenoidal\"
amplitude = 0.5
seed = 7

[forcing]
kind = \"single_mode\"
wavevector = [1, 2, 0]
direction = [0.0, 0.0, 1.0]
amplitude = 0.2
";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snapshot_file_is_bit_exact(seed in any::<u64>(), t in -1e6f64..1e6) {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("f.ldsnap");
        let mut f = random_solenoidal(Grid::new(8).unwrap(), 3, -5.0 / 3.0, 1.0, seed);
        f.time = t;
        let h = SnapshotHeader::for_field(&f, ModelKind::LerayDeconvolution(4), Some(0.125));
        write_snapshot(&path, &f, &h).unwrap();
        let (back, hb) = read_snapshot(&path).unwrap();
        prop_assert_eq!(hb, h);
        for (a, b) in back.components().iter().zip(f.components()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}

#[test]
fn snapshot_on_wrong_grid_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("f.ldsnap");
    let f = random_solenoidal(Grid::new(8).unwrap(), 3, -1.0, 1.0, 1);
    write_snapshot(&path, &f, &SnapshotHeader::for_field(&f, ModelKind::Nse, None)).unwrap();
    let err = read_snapshot_for(&path, Grid::new(16).unwrap()).unwrap_err();
    assert!(matches!(err, Error::GridMismatch(_)), "{err}");
}

#[test]
fn corrupted_magic_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("f.ldsnap");
    let f = random_solenoidal(Grid::new(4).unwrap(), 1, -1.0, 1.0, 1);
    write_snapshot(&path, &f, &SnapshotHeader::for_field(&f, ModelKind::Nse, None)).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[3] ^= 0xff;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));
}

#[test]
fn config_echo_reparses_identically() {
    let cfg = parse_config_str(BASE, "base", &[]).unwrap();
    let echo = cfg.effective_toml();
    let again = parse_config_str(&echo, "echo", &[]).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.effective_toml(), echo);
}

#[test]
fn config_errors_are_specific() {
    match parse_config_str(&BASE.replace("N = 2", "N = 2\nfilter_width = 1"), "x", &[]) {
        Err(Error::UnknownKey(k)) => assert_eq!(k, "model.filter_width"),
        other => panic!("{other:?}"),
    }
    match parse_config_str(&BASE.replace("n = 8", "n = = 8"), "x", &[]) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    match parse_config_str(BASE, "x", &["time.dt=0".into()]) {
        Err(Error::Validation { key, .. }) => assert_eq!(key, "time.dt"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_directory_is_reproducible() {
    let cfg = parse_config_str(BASE, "base", &[]).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    io::run_to_dir(&cfg, Some(a.path())).unwrap();
    let echoed = io::parse_config(&a.path().join(io::EFFECTIVE_CONFIG), &[]).unwrap();
    io::run_to_dir(&echoed, Some(b.path())).unwrap();
    let ma = io::Manifest::read(a.path()).unwrap();
    let mb = io::Manifest::read(b.path()).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(
        std::fs::read(a.path().join(io::DIAG_CSV)).unwrap(),
        std::fs::read(b.path().join(io::DIAG_CSV)).unwrap()
    );
}

#[test]
fn diag_and_study_csv_round_trip() {
    let cfg = parse_config_str(BASE, "base", &[]).unwrap();
    let out = leray_deconv::solver::run(&cfg.solver).unwrap();
    let mut buf = Vec::new();
    write_diag_csv(&mut buf, &out.records).unwrap();
    assert_eq!(read_diag_csv(&buf[..]).unwrap(), out.records);

    let rep = cutoff_table_study(&CutoffSpec::default()).unwrap();
    let table = read_study_csv(study_csv_string(&rep).as_bytes()).unwrap();
    assert_eq!(table.extra, "kind=cutoff_table");
    assert_eq!(table.columns, rep.columns);
    assert_eq!(table.rows, rep.rows);
}
