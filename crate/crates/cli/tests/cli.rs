//! End-to-end checks of the binary: exit codes, record shapes, and
//! byte-determinism across repeated and multi-threaded runs.

use std::process::{Command, Output};

fn aplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aplab"))
        .args(args)
        .env_remove("APLAB_CACHE")
        .output()
        .expect("binary should run")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf8")
}

fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    stdout_str(out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line should be a json record"))
        .collect()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

#[test]
fn rk_example_emits_certified_record() {
    let out = aplab(&["rk", "--k", "3", "--n", "9", "--canonical"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let recs = json_lines(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["kind"], "rk");
    assert_eq!(recs[0]["value"], 5);
    assert_eq!(recs[0]["certified"], true);

    // The emitted witness must survive independent re-verification.
    let witness: Vec<i64> = recs[0]["witness"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_i64().unwrap())
        .collect();
    assert_eq!(witness.len(), 5);
    let set_arg = witness
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let check = aplab(&[
        "count",
        "--set",
        &set_arg,
        "--s",
        "3",
        "--assert-count",
        "0",
        "--assert-free",
        "3",
    ]);
    assert_eq!(exit_code(&check), 0);
}

#[test]
fn count_example_and_assertions() {
    let out = aplab(&["count", "--set", "1,2,3,4,5", "--s", "3"]);
    assert_eq!(exit_code(&out), 0);
    let recs = json_lines(&out);
    assert_eq!(recs[0]["kind"], "count");
    assert_eq!(recs[0]["value"], 4);

    let ok = aplab(&["count", "--set", "1,2,3,4,5", "--s", "3", "--assert-count", "4"]);
    assert_eq!(exit_code(&ok), 0);

    let wrong = aplab(&["count", "--set", "1,2,3,4,5", "--s", "3", "--assert-count", "5"]);
    assert_eq!(exit_code(&wrong), 1);

    let not_free = aplab(&["count", "--set", "1,2,3,4,5", "--s", "3", "--assert-free", "3"]);
    assert_eq!(exit_code(&not_free), 1);
}

#[test]
fn usage_violations_exit_two() {
    // Progression length below three is outside every solver's domain.
    let out = aplab(&["rk", "--k", "2", "--n", "5"]);
    assert_eq!(exit_code(&out), 2);

    let out = aplab(&["count", "--set", "1,2,3", "--s", "2"]);
    assert_eq!(exit_code(&out), 2);

    // A set must come from exactly one source.
    let out = aplab(&["count", "--s", "3"]);
    assert_eq!(exit_code(&out), 2);

    // Unparseable elements are reported, not ignored.
    let out = aplab(&["count", "--set", "1,x,3", "--s", "3"]);
    assert_eq!(exit_code(&out), 2);

    // Unknown flags are native clap usage errors.
    let out = aplab(&["rk", "--k", "3", "--n", "9", "--frobnicate"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let args = ["rk", "--k", "4", "--n", "10", "--canonical"];
    let first = aplab(&args);
    let second = aplab(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);

    let args = [
        "bsg", "--set",
        "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,30,31,32",
        "--seed", "1",
    ];
    let first = aplab(&args);
    let second = aplab(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn worker_count_never_changes_output() {
    let base = [
        "montecarlo",
        "--seed-set",
        "1,2",
        "--window",
        "4",
        "--s",
        "3",
        "--k",
        "4",
        "--trials",
        "500",
        "--seed",
        "7",
    ];
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let mut four = base.to_vec();
    four.extend(["--threads", "4"]);
    let a = aplab(&one);
    let b = aplab(&four);
    assert_eq!(exit_code(&a), 0, "stderr: {}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);

    let recs = json_lines(&a);
    assert_eq!(recs[0]["kind"], "montecarlo");
    assert_eq!(recs[0]["trials"], 500);
}

#[test]
fn csv_format_emits_one_header() {
    let out = aplab(&["count", "--set", "1,2,3", "--s", "3", "--format", "csv"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, vec!["kind,s,size,value", "count,3,3,1"]);

    // Stability tables put several records under a single header,
    // one row per set size from s through n-max.
    let out = aplab(&[
        "fsk", "--k", "4", "--s", "3", "--stability", "--n-max", "5", "--format", "csv",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_str(&out);
    let headers = text
        .lines()
        .filter(|l| l.starts_with("kind,"))
        .count();
    assert_eq!(headers, 1);
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn cache_roundtrip_and_table_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("solver.cache");
    let cache_str = cache.to_str().unwrap();

    let first = aplab(&["rk", "--k", "3", "--n", "12", "--cache", cache_str]);
    assert_eq!(exit_code(&first), 0);
    assert!(cache.exists(), "cache file should be created");

    // A warm rerun must reproduce the cold answer byte for byte.
    let warm = aplab(&["rk", "--k", "3", "--n", "12", "--cache", cache_str]);
    assert_eq!(first.stdout, warm.stdout);

    let found = aplab(&["find-n", "--k", "3", "--value", "5", "--cache", cache_str]);
    assert_eq!(exit_code(&found), 0);
    let recs = json_lines(&found);
    assert_eq!(recs[0]["kind"], "find-n");
    assert_eq!(recs[0]["n"], 9);

    let tables = aplab(&["verify-tables", "--cache", cache_str]);
    assert_eq!(exit_code(&tables), 0, "stderr: {}", String::from_utf8_lossy(&tables.stderr));
    let recs = json_lines(&tables);
    assert!(recs.iter().all(|r| r["kind"] == "table-check"));
    assert!(recs.iter().all(|r| r["violations"] == 0));

    // The cache path may also arrive through the environment.
    let env_run = Command::new(env!("CARGO_BIN_EXE_aplab"))
        .args(["rk", "--k", "3", "--n", "12"])
        .env("APLAB_CACHE", cache_str)
        .output()
        .unwrap();
    assert_eq!(env_run.status.code(), Some(0));
    assert_eq!(env_run.stdout, first.stdout);

    let missing = aplab(&["verify-tables"]);
    assert_eq!(exit_code(&missing), 2);
}

#[test]
fn output_flag_redirects_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.jsonl");
    let out = aplab(&[
        "count", "--set", "3,4,5,6", "--s", "4", "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let rec: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(rec["value"], 1);
}

#[test]
fn construction_commands_produce_verified_sets() {
    let out = aplab(&["construct", "seed", "--bound", "9"]);
    assert_eq!(exit_code(&out), 0);
    let recs = json_lines(&out);
    assert_eq!(recs[0]["size"], 5);

    let literal = aplab(&[
        "construct", "product", "--u", "1,2", "--m", "2", "--v", "1,2", "--n", "2",
        "--variant", "literal",
    ]);
    let recs = json_lines(&literal);
    assert_eq!(recs[0]["set"], serde_json::json!([3, 4, 5, 6]));

    let corrected = aplab(&[
        "construct", "product", "--u", "1,2", "--m", "2", "--v", "1,2", "--n", "2",
        "--variant", "corrected",
    ]);
    let recs = json_lines(&corrected);
    assert_eq!(recs[0]["set"], serde_json::json!([1, 2, 5, 6]));

    let block = aplab(&[
        "construct", "block", "--seed-set", "1", "--window", "1", "--s", "3", "--k", "4",
        "--offsets", "1,1,1",
    ]);
    assert_eq!(exit_code(&block), 0);
    let recs = json_lines(&block);
    assert_eq!(recs[0]["set"], serde_json::json!([1, 7, 13]));
    assert_eq!(recs[0]["sap_count"], 1);

    // Sampled offsets come from the run seed, so they replay exactly.
    let sampled = [
        "construct", "block", "--seed-set", "1,2,4", "--window", "9", "--s", "3", "--k", "4",
        "--seed", "11",
    ];
    let a = aplab(&sampled);
    let b = aplab(&sampled);
    assert_eq!(exit_code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exhaustive_expectation_meets_its_bound() {
    let out = aplab(&[
        "montecarlo", "--seed-set", "1", "--window", "1", "--s", "3", "--k", "4",
        "--exhaustive",
    ]);
    assert_eq!(exit_code(&out), 0);
    let recs = json_lines(&out);
    assert_eq!(recs[0]["kind"], "expectation");
    assert_eq!(recs[0]["vectors"], 8);
    assert_eq!(recs[0]["mean_exact"], "1/4");
    assert_eq!(recs[0]["meets_bound"], true);
}

#[test]
fn freiman_and_growth_reports() {
    let iso = aplab(&[
        "freiman", "--source", "1,2,4", "--affine", "3,-2", "--order", "2", "--assert-iso",
    ]);
    assert_eq!(exit_code(&iso), 0);
    let recs = json_lines(&iso);
    assert_eq!(recs[0]["is_isomorphism"], true);

    let bad = aplab(&[
        "freiman", "--source", "0,1,2", "--image", "0,1,3", "--order", "2",
    ]);
    assert_eq!(exit_code(&bad), 0);
    let recs = json_lines(&bad);
    assert_eq!(recs[0]["is_isomorphism"], false);

    let enforced = aplab(&[
        "freiman", "--source", "0,1,2", "--image", "0,1,3", "--order", "2", "--assert-iso",
    ]);
    assert_eq!(exit_code(&enforced), 1);

    let growth = aplab(&[
        "plunnecke", "--s-set", "0,1,2,3,4,5,6,7,8,9", "--t-set", "0,1,2,3,4,5,6,7,8,9",
    ]);
    assert_eq!(exit_code(&growth), 0);
    let recs = json_lines(&growth);
    assert_eq!(recs[0]["sum_len"], 19);
    assert_eq!(recs[0]["holds"], true);
}

#[test]
fn starved_budget_exits_three() {
    let out = aplab(&["rk", "--k", "3", "--n", "18", "--budget", "10"]);
    assert_eq!(exit_code(&out), 3);

    // Zero means unlimited, so the same search certifies.
    let out = aplab(&["rk", "--k", "3", "--n", "18", "--budget", "0"]);
    assert_eq!(exit_code(&out), 0);
    let recs = json_lines(&out);
    assert_eq!(recs[0]["value"], 8);
}
