use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn deadcore(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deadcore"))
        .env("DEADCORE_OUTPUT", out)
        .env("DEADCORE_CONFIGS", configs())
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn run_writes_to_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("verify-exact.conf");
    let o = deadcore(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(tmp.path().join("verify-exact/reports/residual.json").is_file());
    assert!(text(&o).contains("PASS verify-exact/max_abs_residual"));

    let again = deadcore(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(2));
    assert!(text(&again).contains("already exists"), "{}", text(&again));

    let forced = deadcore(tmp.path(), &["run", cfg.to_str().unwrap(), "--force"]);
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_usage_status() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.conf");
    std::fs::write(&bad, "name = bad\nparams.p = 2\nparams.q = 1/2\ngrid.t_end = 1\ngrid.snapshot_every = 1\ngrid.nx = -3\n").unwrap();
    let o = deadcore(tmp.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("grid.nx"), "{}", text(&o));

    let o = deadcore(tmp.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_all_filters_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = deadcore(tmp.path(), &["verify-all", "--only", "C1,C10", "--no-write"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("C1   PASS"), "{out}");
    assert!(lines[1].starts_with("C10  PASS"), "{out}");
    assert_eq!(lines.len(), 2);
}

#[test]
fn verify_all_writes_a_suite_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = deadcore(tmp.path(), &["verify-all", "--only", "C2"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = std::fs::read_to_string(tmp.path().join("verify-all.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("C2/ode-deadcore,") && l.ends_with(",PASS")));
}

#[test]
fn verify_all_names_a_missing_config_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let o = deadcore(tmp.path(), &["verify-all", "--configs", "/nonexistent/deadcore-configs"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("/nonexistent/deadcore-configs"), "{}", text(&o));
}

#[test]
fn failing_criterion_exits_with_verdict_status() {
    let tmp = tempfile::tempdir().unwrap();
    let o = deadcore(tmp.path(), &["verify-all", "--only", "C4", "--no-write"]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("failing criteria: C4"));
}

#[test]
fn rates_reads_a_stored_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("hs.conf");
    std::fs::write(
        &cfg,
        "name = hs\nparams.p = 2\nparams.q = 1/2\ngrid.nx = 256\ngrid.t_end = 2\n\
         grid.snapshot_every = 1/8\nsource = sample\nsample.profile = halfspace\n",
    )
    .unwrap();
    let o = deadcore(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let run_dir = tmp.path().join("hs");
    let o = deadcore(tmp.path(), &["rates", run_dir.to_str().unwrap(), "0", "1", "1/4,1/8,1/16,1/32"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("\"growth_rate\""), "{out}");
    assert!(out.contains("\"gradient_rate\""), "{out}");
}
