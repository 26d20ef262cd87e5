use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rho-lab"));
    c.env_remove("RHO_LAB_OUT");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "simulate",
            "--m",
            "1000",
            "--k",
            "2",
            "--trials",
            "10000",
            "--seed",
            "7",
            "--out",
            "runs/t.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("runs/t.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10_000);
    for (i, line) in lines.iter().enumerate().take(50) {
        let v: Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        assert_eq!(keys, ["mu", "period", "tau", "trial"]);
        assert_eq!(obj["trial"], i as u64);
        let (mu, tau) = (obj["mu"].as_u64().unwrap(), obj["tau"].as_u64().unwrap());
        assert_eq!(obj["period"].as_u64().unwrap(), tau - mu);
    }
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("runs/t.summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["tool"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(summary["config"]["command"], "simulate");
    assert_eq!(summary["config"]["master_seed"], 7);
    assert_eq!(summary["config"]["trials"], 10_000);
    assert_eq!(summary["summary"]["stats"]["n"], 10_000);
}

#[test]
fn hazard_records_carry_hazard_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["hazard", "--m", "10", "--trials", "200", "--csv", "h.csv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("runs/hazard.jsonl")).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["trial", "mu", "tau", "period", "h_total", "H_final"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let csv = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "trial,mu,tau,period,h_total,H_final"
    );
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 4] = [
        &["simulate", "--m", "300", "--trials", "3000", "--seed", "11"],
        &["hazard", "--m", "20", "--trials", "3000", "--seed", "11"],
        &["poisson", "--m", "30", "--trials", "10000", "--seed", "11"],
        &["exhaustive", "--m", "30", "--trials", "40", "--seed", "11"],
    ];
    for args in commands {
        let mut outputs = Vec::new();
        for (i, workers) in ["1", "3", "1"].iter().enumerate() {
            let out = format!("r{i}.jsonl");
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--workers", workers, "--out", &out]);
            let o = run_in(dir.path(), &full);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            outputs.push(fs::read(dir.path().join(&out)).unwrap());
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{args:?}");
        assert_eq!(outputs[0], outputs[2], "{args:?}");
    }
}

#[test]
fn theory_prints_collision_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "theory", "--m", "10", "--k", "2", "--x", "1", "--out", "th.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for want in ["N=14", "lambda=0.91", "b1=2.0384", "b2=7.8624"] {
        assert!(text.lines().any(|l| l == want), "missing {want} in\n{text}");
    }
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("th.json")).unwrap()).unwrap();
    assert_eq!(v["summary"]["bounds"]["n_windows"], 14);
}

#[test]
fn oracle_command_reports_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["oracle", "--m", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("E_tau=4.375"));
    assert!(text.contains("P_no_seed_period1=0.25"));
    let atoms = fs::read_to_string(dir.path().join("runs/oracle.jsonl")).unwrap();
    assert_eq!(atoms.lines().count(), 9);
}

#[test]
fn out_directory_follows_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .current_dir(dir.path())
        .env("RHO_LAB_OUT", "elsewhere")
        .args(["simulate", "--m", "20", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("elsewhere/simulate.jsonl").exists());
    assert!(dir.path().join("elsewhere/simulate.summary.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run_in(dir.path(), args).status.code();
    assert_eq!(code(&["simulate", "--m", "5", "--bogus"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["simulate", "--m", "0"]), Some(2));
    assert_eq!(code(&["simulate", "--m", "5", "--workers", "0"]), Some(2));
    assert_eq!(code(&["hazard", "--m", "5", "--k", "3"]), Some(2));
    assert_eq!(
        code(&["simulate", "--m", "4294967296", "--k", "3"]),
        Some(2)
    );
    assert_eq!(code(&["oracle", "--m", "4", "--k", "2"]), Some(3));
    assert_eq!(
        code(&["exhaustive", "--m", "1000", "--k", "3", "--trials", "1"]),
        Some(3)
    );
    assert_eq!(code(&["poisson", "--m", "30", "--trials", "10"]), Some(2));
}

#[test]
fn report_from_corrupt_or_missing_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("acceptance.json");
    fs::write(&bad, "{\"tool\": [trunc").unwrap();
    let o = run_in(dir.path(), &["report", "--from", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(bad.to_str().unwrap()), "{}", stderr(&o));

    let missing = dir.path().join("nope.json");
    let o = run_in(dir.path(), &["report", "--from", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.json"));
}

#[test]
fn threshold_override_flips_pass_to_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["report", "--criteria", "10,13", "--out", "rep"],
    );
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("PASS criterion 10")));
    let stored = dir.path().join("rep/acceptance.json");
    assert!(dir.path().join("rep/criterion-10.jsonl").exists());

    let from = stored.to_str().unwrap();
    let o = run_in(dir.path(), &["report", "--from", from]);
    assert_eq!(o.status.code(), Some(0));

    let o = run_in(
        dir.path(),
        &["report", "--from", from, "--threshold", "c10.abs_error=0"],
    );
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(
        text.lines().any(|l| l.starts_with("FAIL criterion 10")),
        "{text}"
    );
    assert!(
        text.lines().any(|l| l.starts_with("PASS criterion 13")),
        "{text}"
    );

    let o = run_in(
        dir.path(),
        &["report", "--from", from, "--threshold", "c99.nothing=1"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run_in(
        dir.path(),
        &[
            "report",
            "--from",
            from,
            "--threshold",
            "c13.mean_rel_error",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_embeds_tool_config_and_basis() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["report", "--criteria", "7", "--out", "rep", "--seed", "5"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rep/acceptance.json")).unwrap())
            .unwrap();
    assert_eq!(v["tool"]["name"], "rho-lab");
    assert_eq!(v["config"]["master_seed"], 5);
    assert_eq!(v["criteria"][0]["id"], 7);
    assert_eq!(v["criteria"][0]["basis"], "exact-enumeration");
    assert_eq!(v["pass"], true);
}
