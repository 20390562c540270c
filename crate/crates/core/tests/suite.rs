use std::path::PathBuf;

use deadcore::suite::{verify_all, SuiteOptions};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn only_filter_selects_a_subset() {
    let opts = SuiteOptions {
        only: vec!["c7".into(), "C1".into()],
        ..Default::default()
    };
    let summary = verify_all(&configs(), &opts).unwrap();
    let ids: Vec<&str> = summary.results.iter().map(|r| r.id).collect();
    assert_eq!(ids, ["C1", "C7"]);
    assert!(summary.passed(), "{}", summary.table());
}

#[test]
fn suite_writes_isolated_directories_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = SuiteOptions {
        only: vec!["C2".into()],
        output_root: Some(tmp.path().to_path_buf()),
        force: false,
    };
    let first = verify_all(&configs(), &opts).unwrap();
    assert!(first.passed(), "{}", first.table());
    assert!(tmp.path().join("ode-deadcore/summary.csv").is_file());
    let err = verify_all(&configs(), &opts).unwrap_err();
    assert!(err.to_string().contains("already exists"), "{err}");
    let forced = verify_all(&configs(), &SuiteOptions { force: true, ..opts }).unwrap();
    assert_eq!(first.rows(), forced.rows());
}

#[test]
fn missing_config_is_reported_by_path() {
    let tmp = tempfile::tempdir().unwrap();
    let err = verify_all(tmp.path(), &SuiteOptions::default()).unwrap_err();
    assert!(err.to_string().contains("verify-exact.conf"), "{err}");
}
