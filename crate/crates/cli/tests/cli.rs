use std::path::Path;
use std::process::{Command, Output};

fn hiersel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiersel")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate(dir: &Path) {
    let o = hiersel(dir, &["simulate", "--seed", "2", "--n", "100", "--p", "4", "--out", "d.csv", "--truth", "t.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn penalty_check_reports_full_pass_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = hiersel(dir.path(), &["penalty-check", "--family", "cap", "--q", "2", "--p", "5", "--trials", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], 1000);
    assert_eq!(report["trials"], 1000);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pass rate 1000/1000"));
}

#[test]
fn mismatched_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "x1,x2,y\n1,2,3\n4,5\n").unwrap();
    assert_eq!(hiersel(dir.path(), &["fit", "--data", "bad.csv"]).status.code(), Some(3));
    std::fs::write(dir.path().join("nan.csv"), "x1,x2,y\n1,2,3\n4,abc,6\n").unwrap();
    assert_eq!(hiersel(dir.path(), &["fit", "--data", "nan.csv"]).status.code(), Some(3));
    simulate(dir.path());
    let o = hiersel(dir.path(), &["fit", "--data", "d.csv", "--response", "missing"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(hiersel(dir.path(), &["fit", "--data", "absent.csv"]).status.code(), Some(3));
}

#[test]
fn flag_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["fit", "--bogus"],
        vec!["nonexistent"],
        vec!["fit"],
        vec!["fit", "--data", "d.csv", "--penalty", "cap:q=0.5"],
        vec!["fit", "--data", "d.csv", "--lambda", "-1"],
        vec!["penalty-check", "--family", "nosuch"],
        vec!["simulate", "--noise", "cauchy"],
    ] {
        simulate(dir.path());
        assert_eq!(hiersel(dir.path(), &args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(hiersel(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn strict_turns_nonconvergence_into_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let loose = ["fit", "--data", "d.csv", "--lambda", "0.01", "--max-iter", "2"];
    assert_eq!(hiersel(dir.path(), &loose).status.code(), Some(0));
    let mut strict = loose.to_vec();
    strict.push("--strict");
    assert_eq!(hiersel(dir.path(), &strict).status.code(), Some(4));
}

#[test]
fn fit_writes_json_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let o = hiersel(dir.path(), &["fit", "--data", "d.csv", "--out", "f.json"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("fit: cap:q=2"));
    assert_eq!(stdout(&o).lines().count(), 1);
    let fit: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("f.json")).unwrap()).unwrap();
    assert_eq!(fit["theta"].as_array().unwrap().len(), 10);
    assert_eq!(fit["converged"], true);
    // the simulated truth has three main effects and two pairs on p = 4
    let truth: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(truth["support"], fit["support"]);
}

#[test]
fn expand_lists_columns_in_lexicographic_order() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let o = hiersel(dir.path(), &["expand", "--data", "d.csv", "--response", "y"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels, ["x1", "x2", "x3", "x4", "x1:x2", "x1:x3", "x1:x4", "x2:x3", "x2:x4", "x3:x4"]);
}

#[test]
fn path_returns_one_fit_per_level() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let o = hiersel(dir.path(), &["path", "--data", "d.csv", "--n-lambda", "4", "--penalty", "bien"]);
    assert!(o.status.success());
    let fits: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fits.len(), 4);
    assert!(fits[0]["theta"].as_array().unwrap().iter().all(|v| v == 0.0));
}

#[test]
fn rate_bench_reads_the_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    std::fs::write(
        dir.path().join("small.toml"),
        "replications = 2\n[grid]\np = [6]\ns_main = [2]\ns_int = [1]\nn = [100, 200]\n",
    )
    .unwrap();
    let o = hiersel(dir.path(), &["rate-bench", "--config", "small.toml", "--out", "r.csv", "--summary", "s.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "penalty,n,p,s,rep,l1_error,pe_error,predicted,seed");
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["penalties"].as_array().unwrap().len(), 2);

    let shipped: hiersel::bench::ExperimentConfig = toml::from_str(&std::fs::read_to_string(config).unwrap()).unwrap();
    assert_eq!(shipped, hiersel::bench::ExperimentConfig::default());
}

#[test]
fn help_describes_the_checked_claim() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, phrase) in [
        ("re-check", "Restricted eigenvalue"),
        ("a0-check", "Noise-event"),
        ("eigs-check", "eigenvalues bounded away"),
        ("psi-check", "subexponential"),
        ("conc-check", "Concentration"),
        ("penalty-check", "sandwich inequalities"),
        ("rate-bench", "s sqrt(log p1 / n)"),
    ] {
        let o = hiersel(dir.path(), &[cmd, "--help"]);
        assert!(stdout(&o).contains(phrase), "{cmd}");
    }
}
