use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn posauction(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posauction")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn small_experiment(dir: &Path) -> String {
    let path = dir.join("exp.json");
    fs::write(
        &path,
        r#"{
            "generator": { "n": 6, "m": 40 },
            "treatments": [
                { "kind": "baseline" },
                { "kind": "reserve", "gamma": 0.5 },
                { "kind": "boost_reserve", "gamma": 0.5 }
            ],
            "dynamics": { "pretrain_iters": 8, "treatment_iters": 6 },
            "runs": 2,
            "seed": 7
        }"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn tight_instances_reports_the_reserve_only_ratio() {
    let o = posauction(&["tight-instances", "--gamma", "0.5", "--eps", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = lines(&o);
    assert_eq!(rows.len(), 4);
    let reserve = rows.iter().find(|r| r["kind"] == "reserve_only").unwrap();
    assert!((reserve["expected_wel_ratio"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(reserve["instance"]["values"].is_array());
    let achieved = reserve["achieved_wel_ratio"].as_f64().unwrap();
    assert!((achieved - 2.0 / 3.0).abs() < 2e-3);
}

#[test]
fn tight_instances_writes_files_and_stamp() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tight");
    let o = posauction(&["tight-instances", "--gamma", "0.3", "--kind", "boost-only", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let stamp: Value = serde_json::from_str(&fs::read_to_string(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(stamp["command"], "tight-instances");
    assert_eq!(stamp["resolved"]["gamma"], 0.3);
    assert!(out.join("tight_boost_only.json").exists());
}

#[test]
fn verify_bounds_corollary_3_passes_every_trial() {
    let o = posauction(&["verify-bounds", "--corollary", "3", "--gamma", "0.5", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = lines(&o);
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r["pass"] == true));
    assert!(rows.iter().all(|r| r["corollary"] == "vcg_reserve_boost"));
}

#[test]
fn verify_bounds_csv_has_a_header_and_a_row_per_trial() {
    let o = posauction(&["verify-bounds", "--corollary", "6", "--gamma", "0.4", "--trials", "5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut it = text.lines();
    assert_eq!(it.next(), Some("trial,corollary,gamma,wel_ratio,wel_bound,rev_ratio,rev_bound,pass"));
    assert_eq!(it.count(), 5);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(posauction(&["verify-bounds", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(posauction(&["verify-bounds", "--corollary", "7", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(posauction(&["clear", "--bogus"]).status.code(), Some(2));
    assert_eq!(posauction(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(posauction(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_input_files_exit_2_with_a_hint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    fs::write(&cfg, r#"{ "treatments": [], "unknown": 1 }"#).unwrap();
    let o = posauction(&["run-experiment", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("unknown"), "{err}");
    assert!(err.contains("--help"), "{err}");
}

#[test]
fn run_experiment_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_experiment(tmp.path());
    let out = tmp.path().join("out");
    let o = posauction(&["run-experiment", "--config", &cfg, "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("treatment,gamma,wel_lift_mean,wel_lift_ci,rev_lift_mean,rev_lift_ci\n"));
    for name in ["summary.csv", "report.json", "resolved_config.json", "welfare_trend.csv", "multiplier_trend.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    for run in 0..2 {
        for label in ["pretrain", "baseline", "reserve_0.5", "boost_reserve_0.5"] {
            let traj = fs::read_to_string(out.join(format!("traj_{run}_{label}.csv"))).unwrap();
            assert!(traj.starts_with("iteration,welfare,revenue,avg_multiplier,delta_0,"));
        }
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains("\nbaseline,0.0,0.0,0.0,0.0,0.0\n"));
}

#[test]
fn run_experiment_is_byte_identical_across_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_experiment(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = posauction(&["run-experiment", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"]);
    let ob = posauction(&["run-experiment", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
}

#[test]
fn run_experiment_seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_experiment(tmp.path());
    let out = tmp.path().join("out");
    let o = posauction(&["run-experiment", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(o.status.code(), Some(0));
    let stamp: Value = serde_json::from_str(&fs::read_to_string(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(stamp["resolved"]["seed"], 99);
}

#[test]
fn clear_prices_a_gsp_auction() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("inst.json");
    let mech = tmp.path().join("mech.json");
    fs::write(&inst, r#"{"n": 2, "m": 1, "slots": [1], "values": [[1.0], [0.6]], "pos": [[1.0]]}"#).unwrap();
    fs::write(&mech, r#"{"format": "gsp", "reserves": [[0.4], [0.2]]}"#).unwrap();
    let (i, m) = (inst.to_str().unwrap(), mech.to_str().unwrap());

    let o = posauction(&["clear", "--instance", i, "--mechanism", m]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["welfare"], 1.0);
    assert_eq!(v["revenue"], 0.6);
    assert_eq!(v["outcome"]["allocation"], serde_json::json!([[0, 0, 0]]));

    let o = posauction(&["clear", "--instance", i, "--mechanism", m, "--multipliers", "0.5,1", "--format", "csv"]);
    assert_eq!(stdout(&o), "auction,slot,bidder,payment\n0,0,1,0.5\n");
}

#[test]
fn check_dominance_passes_and_fails_with_the_right_codes() {
    let o = posauction(&["check-dominance", "--lemma", "gsp", "--trials", "3", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(lines(&o).len(), 3);

    // bidder 0 is alone in a one-slot auction: any bid at the reserve wins at
    // the reserve price, so a bid below value is undominated
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("inst.json");
    let mech = tmp.path().join("mech.json");
    fs::write(&inst, r#"{"n": 1, "m": 1, "slots": [1], "values": [[1.0]], "pos": [[1.0]]}"#).unwrap();
    fs::write(&mech, r#"{"format": "vcg", "reserves": [[0.5]]}"#).unwrap();
    let o = posauction(&[
        "check-dominance",
        "--lemma",
        "vcg",
        "--instance",
        inst.to_str().unwrap(),
        "--mechanism",
        mech.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let row = &lines(&o)[0];
    assert_eq!(row["pass"], false);
    assert!(row["instance"].is_object());
    assert!(!row["report"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn check_dominance_rejects_reserves_at_value() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("inst.json");
    let mech = tmp.path().join("mech.json");
    fs::write(&inst, r#"{"n": 2, "m": 1, "slots": [1], "values": [[1.0], [0.5]], "pos": [[1.0]]}"#).unwrap();
    fs::write(&mech, r#"{"format": "vcg", "reserves": [[1.0], [0.0]]}"#).unwrap();
    let o = posauction(&[
        "check-dominance",
        "--lemma",
        "vcg",
        "--instance",
        inst.to_str().unwrap(),
        "--mechanism",
        mech.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("hypothesis r < v violated"));
}
