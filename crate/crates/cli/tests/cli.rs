use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn trustnum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustnum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_csv_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out = trustnum(&[
        "run",
        s(&scenario("tiny_two_paths.json")),
        "--out",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "rates.csv",
        "margins.csv",
        "prices.csv",
        "objective.csv",
        "rates.svg",
        "margins.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 2);
}

#[test]
fn sweep_goes_to_subdirectories_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let fig5 = scenario("paper_fig5.json");
    let out = trustnum(&["run", s(&fig5), "--out", s(dir.path())]);
    assert!(out.status.success());
    assert!(dir.path().join("rs_10/rates.csv").is_file());
    assert!(dir.path().join("rs_14/rates.csv").is_file());

    let single = dir.path().join("single");
    let out = trustnum(&[
        "run",
        s(&fig5),
        "--out",
        s(&single),
        "--rs",
        "12",
        "--cold-start",
    ]);
    assert!(out.status.success());
    assert!(single.join("rates.csv").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("R=12"));
}

#[test]
fn greedy_schedule_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = trustnum(&[
        "run",
        s(&scenario("tiny_one_conflict.json")),
        "--out",
        s(dir.path()),
        "--schedule",
        "greedy",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_variant(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let text = std::fs::read_to_string(scenario("tiny_two_paths.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    let p = dir.join("variant.json");
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn validation_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_variant(dir.path(), |v| v["trust"]["schedule"][0][1] = 1.2.into());
    let out = trustnum(&["run", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trust.schedule[0][1]"));
    assert!(!dir.path().join("o").exists());

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(trustnum(&["inspect", s(&bad)]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_3_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_variant(dir.path(), |v| v["solver"]["max_iter"] = 5.into());
    let out_dir = dir.path().join("o");
    let out = trustnum(&["run", s(&p), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    let objective = std::fs::read_to_string(out_dir.join("objective.csv")).unwrap();
    assert!(objective.lines().nth(1).unwrap().ends_with(",0"));
}

#[test]
fn missing_file_exits_1() {
    assert_eq!(
        trustnum(&["inspect", "/nonexistent/x.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn verify_and_inspect() {
    let out = trustnum(&["verify", s(&scenario("tiny_one_conflict.json"))]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("[ok]"));

    let out = trustnum(&["inspect", s(&scenario("paper_fig5.json"))]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("8 nodes, 11 links"));
    assert!(text.contains("independent sets:"));
    assert!(text.contains("period 4 trust:"));
}
