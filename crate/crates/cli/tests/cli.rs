use std::path::Path;
use std::process::{Command, Output};

use ramdp_core::environments::build_ab;
use ramdp_core::model::RamMdp;

fn ramdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const AB_SWEEP: &str = r#"
planners = ["ratm", "mlatm-avg"]
episodes = 20
[env]
kind = "ab"
[sweep]
param = "c"
values = [0.1, 0.3, 0.4]
"#;

#[test]
fn oracle_ab_reports_threshold_and_agreement() {
    let o = ramdp(&["oracle", "ab"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("threshold: 0.355555556"), "{text}");
    assert!(text.contains("agreement: 51/51"), "{text}");
}

#[test]
fn oracle_lucky_unlucky_closed_form() {
    let o = ramdp(&["oracle", "lucky-unlucky", "--pmax", "0.5", "--c", "0.2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("optimal: measure=true value=0.300000"),
        "{text}"
    );
    assert!(text.contains("agreement: yes"), "{text}");
}

#[test]
fn oracle_belief_dep_interior_point() {
    let text = stdout(&ramdp(&["oracle", "belief-dep"]));
    assert!(text.contains("closed form: 0.375000"), "{text}");
    assert!(text.contains("solver:      0.375000"), "{text}");
}

#[test]
fn oracle_bound_prints_margin() {
    let o = ramdp(&[
        "oracle",
        "bound",
        "--env",
        "snakemaze",
        "--alpha",
        "0.6",
        "--width",
        "2",
        "--height",
        "5",
        "--episodes",
        "20",
        "--planner",
        "mlatm-avg",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("bound c/(1-gamma): 0.200000"), "{text}");
    assert!(text.contains("margin:"), "{text}");
    assert!(text.contains("PASS"), "{text}");
}

#[test]
fn unsupported_oracle_target_is_a_usage_error() {
    assert_eq!(ramdp(&["oracle", "drone"]).status.code(), Some(2));
    assert_eq!(
        ramdp(&["oracle", "ab", "--width", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ab.json");
    let o = ramdp(&[
        "export-model",
        "ab",
        "--c",
        "0.25",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("4 states"));
    assert_eq!(RamMdp::load(&path).unwrap(), build_ab(0.25).unwrap());
}

#[test]
fn export_to_missing_directory_fails_with_io_code() {
    let o = ramdp(&["export-model", "ab", "--out", "/nonexistent/dir/ab.json"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ab.toml", AB_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ramdp(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    let ratm: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("ab,ratm,"))
        .map(|l| l.split(',').nth(8).unwrap())
        .collect();
    assert_eq!(ratm, ["1", "1", "0"]);
}

#[test]
fn misspecified_sweep_has_planning_alpha_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mis.toml",
        r#"
planners = ["ratm"]
episodes = 3
[env]
kind = "snakemaze"
width = 2
height = 5
[sweep]
param = "alpha"
values = [0.7, 0.9]
planning_alpha = 0.6
"#,
    );
    let o = ramdp(&["run", &cfg, "--out", "-"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().ends_with(",planning_alpha"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.6")), "{text}");
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &AB_SWEEP.replace("0.1, 0.3", "0.3, 0.1"),
    );
    assert_eq!(ramdp(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(ramdp(&["run", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "slow.toml",
        r#"
planners = ["ratm"]
episodes = 1
[env]
kind = "snakemaze"
[sweep]
param = "c"
values = [0.01]
[solver]
max_iter = 2
"#,
    );
    assert_eq!(ramdp(&["run", &cfg, "--out", "-"]).status.code(), Some(3));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ramdp_cli::config::ExperimentConfig::load(&path).unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}
