//! The `attractor-lab` binary: subcommands, exit codes, scenario runs and
//! determinism of the written artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attractor-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn attractor-lab")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn tail_of_p0_at_theta_3() {
    let o = run(&["tail", "--driver", "p0", "--theta", "3", "--horizon", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!((v["value"].as_f64().unwrap() - 0.643).abs() < 1e-3, "{v}");
    assert_eq!(v["converged"], Value::Bool(true));
}

#[test]
fn dirichlet_eigenvalue() {
    let o = run(&["eigen", "--bc", "dirichlet", "--grid-n", "257"]);
    assert_eq!(o.status.code(), Some(0));
    let g = stdout_json(&o)["gamma0"].as_f64().unwrap();
    assert!((g - 9.8696).abs() < 0.01, "{g}");
}

#[test]
fn verify_lemma_constant_driver() {
    let o = run(&["verify-lemma", "--driver", "constant:1", "--theta", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout_json(&o)["max_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["tail", "--bogus"][..],
        &["run"],
        &["frobnicate"],
        &["eigen", "--bc", "sideways"],
        &["tail", "--driver", "p9"],
        &[],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(64), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["tail", "--theta", "0.5"]).status.code(), Some(64));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = bin().env("ATTRACTOR_LAB_THREADS", "zero").args(["list"]).output().unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn pullback_writes_field_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "pullback", "--driver", "constant:0.5", "--theta", "3", "--grid-n", "32", "--horizon", "100", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["classification"], "strongly_positive");
    assert!((v["sup_norm"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
    let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("x,value\n"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        "{\"schema\": 1, \"name\": \"bad\",\n \"driver\": {\"kind\": \"p0\"},\n \"colour\": 3}\n",
    )
    .unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains(":3:"), "{err}");
}

fn scenario_file(dir: &Path, experiments: &str) -> String {
    let p = dir.join("s.json");
    fs::write(
        &p,
        format!(
            r#"{{"schema": 1, "name": "s", "driver": {{"kind": "p0"}}, "boundary": {{"kind": "neumann"}},
            "grid": {{"n_nodes": 32}}, "nonlinearity": {{"kind": "pure_power", "rho": 1, "theta": 3}},
            "experiments": {experiments}}}"#
        ),
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_exit_codes_follow_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let pass = scenario_file(dir.path(), r#"[{"kind": "spectrum", "name": "sp", "expect": [0, 0]}]"#);
    assert_eq!(run(&["run", &pass, "--out", out]).status.code(), Some(0));

    let fail = scenario_file(dir.path(), r#"[{"kind": "spectrum", "name": "sp", "expect": [1, 1]}]"#);
    assert_eq!(run(&["run", &fail, "--out", out]).status.code(), Some(1));
    let report: Value = serde_json::from_str(&fs::read_to_string(Path::new(out).join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiments"][0]["status"], "fail");
    assert!(report["experiments"][0]["anchor"].as_str().unwrap().contains("spectrum"));

    // The ladder at p0·(-20) has not settled by horizon 100.
    let slow = scenario_file(
        dir.path(),
        r#"[{"kind": "orbit", "name": "o", "t_min": -20, "t_max": -18, "sample": 1, "horizons": [25, 50, 100]}]"#,
    );
    assert_eq!(run(&["run", &slow, "--out", out]).status.code(), Some(2));
}

#[test]
fn bundled_scenario_runs_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o1 = bin()
        .env("ATTRACTOR_LAB_THREADS", "1")
        .args(["run", "autonomous_s5", "--out", a.path().to_str().unwrap()])
        .output()
        .unwrap();
    let o2 = bin()
        .env("ATTRACTOR_LAB_THREADS", "4")
        .args(["run", "autonomous_s5", "--out", b.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o1.status.code(), Some(0), "{}", String::from_utf8_lossy(&o1.stdout));
    assert_eq!(o2.status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "report.json"));
    assert!(names.len() >= 5, "{names:?}");
    for n in names {
        let x = fs::read(a.path().join(&n)).unwrap();
        let y = fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs between thread counts");
    }
}

#[test]
fn list_names_every_bundled_scenario() {
    let o = run(&["list"]);
    let s = String::from_utf8_lossy(&o.stdout);
    for name in ["homoclinic_threshold", "heteroclinic_orbit", "decaying_driver", "autonomous_s1", "autonomous_s5"] {
        assert!(s.contains(name), "{s}");
    }
}

#[test]
fn negative_shift_lists_and_unsettled_orbits() {
    let o = run(&["trichotomy", "--driver", "constant:-0.5", "--grid-n", "16", "--shifts", "-5,5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["case_tag"], "s1");

    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "orbit", "--driver", "p1", "--grid-n", "16", "--t-min", "-20", "--t-max", "-19", "--horizon", "100", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
