use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn malsched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_malsched"))
        .current_dir(dir)
        .args(args)
        .env_remove("MALSCHED_MAX_EVENTS")
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn example3(dir: &Path) {
    let out = malsched(dir, &["adversary", "--mode", "example", "--ell", "3", "--out", "ex3.json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_example_reports_makespan() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    let out = malsched(
        dir.path(),
        &["simulate", "--instance", "ex3.json", "--scheduler", "equi", "--out", "t.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["metrics"]["makespan"], "4");
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(trace["metrics"]["makespan"], "4");
    assert_eq!(trace["completions"]["sets"]["S1"], "4");
}

#[test]
fn missing_instance_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(dir.path(), &["simulate", "--instance", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_instance_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"processors": "0", "sets": [{"id": "S1", "jobs": [{"id": "J1", "phases": [{"kind": "seq", "work": "1"}]}]}]}"#,
    )
    .unwrap();
    let out = malsched(dir.path(), &["simulate", "--instance", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn over_allocating_policy_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    std::fs::write(dir.path().join("p.json"), r#"{"shares": {"S1/J01": "1", "S1/J02": "1/2"}}"#).unwrap();
    let out = malsched(dir.path(), &["simulate", "--instance", "ex3.json", "--policy-file", "p.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn starving_policy_file_stalls() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("i.json"),
        r#"{"processors": "1", "sets": [{"id": "S1", "jobs": [{"id": "J1", "phases": [{"kind": "par", "work": "1"}]}]}]}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("p.json"), r#"{"shares": {}}"#).unwrap();
    let out = malsched(dir.path(), &["simulate", "--instance", "i.json", "--policy-file", "p.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn event_limit_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    let run = |limit: &str| {
        Command::new(env!("CARGO_BIN_EXE_malsched"))
            .current_dir(dir.path())
            .args(["simulate", "--instance", "ex3.json"])
            .env("MALSCHED_MAX_EVENTS", limit)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(2));
    assert_eq!(run("1000"), Some(0));
    assert_eq!(run("many"), Some(1));
}

#[test]
fn sweep_example_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(dir.path(), &["sweep", "--ell", "2..4", "--mode", "example", "--scheduler", "equi"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().take(8).collect::<Vec<_>>(),
        ["ell", "n", "scheduler", "objective", "achieved", "opt_upper", "opt_lower", "ratio_lower"]
    );
    let ratios: Vec<String> = rdr.records().map(|r| r.unwrap()[7].to_string()).collect();
    assert_eq!(ratios, ["3/2", "2", "5/2"]);
}

#[test]
fn sweep_empty_range_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(dir.path(), &["sweep", "--ell", "4..2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_guard() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(dir.path(), &["sweep", "--ell", "2..5", "--mode", "permuted"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_permuted_is_constant_per_ell() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(
        dir.path(),
        &["sweep", "--ell", "2..3", "--mode", "permuted", "--seeds", "10", "--scheduler", "equi"],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for ell in ["2", "3"] {
        let ratios: Vec<&str> = rows.iter().filter(|r| &r[0] == ell).map(|r| r.get(7).unwrap()).collect();
        assert_eq!(ratios.len(), 10);
        assert!(ratios.iter().all(|r| *r == ratios[0]));
    }
}

#[test]
fn sweep_adaptive_rejects_clairvoyant_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(dir.path(), &["sweep", "--ell", "2", "--mode", "adaptive", "--scheduler", "par-first"]);
    assert_eq!(out.status.code(), Some(1));
    let out = malsched(dir.path(), &["sweep", "--ell", "2..3", "--mode", "adaptive", "--scheduler", "equi,equi-serial"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout.iter().filter(|b| **b == b'\n').count(), 5);
}

#[test]
fn verify_random_corpora_hold() {
    let dir = tempfile::tempdir().unwrap();
    for what in ["chain", "lemma1", "lemma2", "proof-bound"] {
        let out = malsched(dir.path(), &["verify", "--what", what, "--random", "50", "--seed", "1"]);
        assert_eq!(out.status.code(), Some(0), "{what}");
        let doc = json_out(&out);
        assert_eq!(doc["passed"], 50);
        assert_eq!(doc["holds"], true);
    }
}

#[test]
fn verify_corrupted_trace_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    let out = malsched(dir.path(), &["simulate", "--instance", "ex3.json", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(0));
    let mut trace: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    trace["pieces"]["S1/J01"][0][2] = Value::String("5".into());
    std::fs::write(dir.path().join("bad.json"), trace.to_string()).unwrap();
    let out = malsched(dir.path(), &["verify", "--what", "lemma1", "--instance", "ex3.json", "--trace", "bad.json"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json_out(&out);
    assert_eq!(doc["holds"], false);
    assert!(!doc["failures"][0]["report"]["trace_violations"].as_array().unwrap().is_empty());

    let out = malsched(dir.path(), &["verify", "--what", "lemma1", "--instance", "ex3.json", "--trace", "t.json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_proof_bound_on_a_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"processors": "1", "sets": [{"id": "S1", "jobs": [
            {"id": "J1", "phases": [{"kind": "par", "work": "1"}, {"kind": "seq", "work": "2"}]},
            {"id": "J2", "phases": [{"kind": "par", "work": "3"}, {"kind": "seq", "work": "1"}]}]}]}"#,
    )
    .unwrap();
    let out = malsched(dir.path(), &["verify", "--what", "proof-bound", "--instance", "s.json", "--alpha", "1/2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["report"]["holds"], true);
    let out = malsched(dir.path(), &["verify", "--what", "proof-bound", "--instance", "s.json", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reduce_writes_par_seq_instance() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    let out = malsched(
        dir.path(),
        &["reduce", "--instance", "ex3.json", "--out", "j.json", "--report", "r.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["preserved_schedule"], true);
    assert_eq!(report["reference_valid"], true);
    let reduced = std::fs::read_to_string(dir.path().join("j.json")).unwrap();
    let reduced = malsched::model::Instance::from_json(&reduced).unwrap();
    assert!(reduced.is_par_seq_star());
}

#[test]
fn bounds_report() {
    let dir = tempfile::tempdir().unwrap();
    example3(dir.path());
    let out = malsched(dir.path(), &["bounds", "--instance", "ex3.json", "--objective", "makespan"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_out(&out);
    assert_eq!(doc["achieved"], "4");
    assert_eq!(doc["opt_upper"], "2");
    assert_eq!(doc["ratio_lower"], "2");
}

#[test]
fn adaptive_adversary_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = malsched(
        dir.path(),
        &["adversary", "--mode", "adaptive", "--ell", "3", "--out", "a.json", "--trace", "t.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = json_out(&out);
    assert_eq!(doc["alive"], serde_json::json!([27, 9, 3, 1]));
    assert_eq!(doc["metrics"]["makespan"], "4");
    let out = malsched(dir.path(), &["adversary", "--mode", "example", "--ell", "8"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(malsched(dir.path(), &["simulate"]).status.code(), Some(1));
    assert_eq!(malsched(dir.path(), &["simulate", "--instance", "x", "--scheduler", "srpt"]).status.code(), Some(1));
    assert_eq!(malsched(dir.path(), &["--help"]).status.code(), Some(0));
}
