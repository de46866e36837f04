//! End-to-end tests of the `quiverkit` binary.
//!
//! Golden files live in `tests/golden`; run with `UPDATE_GOLDEN=1` to rewrite
//! them after an intended output change.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

fn quiverkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quiverkit"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("the binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = quiverkit(args);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).expect("json report")
}

fn exit_code(args: &[&str]) -> i32 {
    quiverkit(args).status.code().expect("exit code")
}

/// Paths inside the repository, so that the goldens do not depend on where
/// it is checked out.
const CONIFOLD: &str = "fixtures/conifold.json";
const CONIFOLD_W: &str = "fixtures/conifold_superpotential.json";
const CONIFOLD_REP: &str = "fixtures/conifold_rep_y_zero.json";

fn golden_cases() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("classify.json", vec!["classify", CONIFOLD]),
        ("classify.txt", vec!["--format", "text", "--trace", "classify", CONIFOLD]),
        ("etale_eq.json", vec!["etale-eq", CONIFOLD, "fixtures/cyclic_2_3.json"]),
        ("vacua.json", vec!["vacua", CONIFOLD, CONIFOLD_W]),
        ("vacua.txt", vec!["--format", "text", "vacua", CONIFOLD, CONIFOLD_W]),
        ("strata.json", vec!["strata", CONIFOLD]),
        ("local_quiver.json", vec!["local-quiver", CONIFOLD, "--type", "[(1,[1,0]);(1,[0,1])]"]),
        ("simple.json", vec!["simple", CONIFOLD]),
        ("types.json", vec!["types", CONIFOLD]),
        ("hilbert.json", vec!["hilbert", CONIFOLD, "--blocks", "1,1"]),
        ("rep_check.json", vec!["rep", "check", CONIFOLD, CONIFOLD_REP, "--superpotential", CONIFOLD_W]),
        ("rep_stability.json", vec!["rep", "stability", CONIFOLD, CONIFOLD_REP, "--theta", "1,-1"]),
        ("rep_moment_map.json", vec!["rep", "moment-map", CONIFOLD, CONIFOLD_REP]),
        ("rep_dim.txt", vec!["--format", "text", "rep", "dim", CONIFOLD]),
        ("batch.txt", vec!["--format", "text", "batch", "fixtures/batch"]),
    ]
}

#[test]
fn outputs_match_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, args) in golden_cases() {
        let actual = stdout(&args);
        let path = dir.join(name);
        if update {
            fs::write(&path, &actual).unwrap();
            continue;
        }
        let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(actual, expected, "golden mismatch for {name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let mut cases = golden_cases();
    cases.push(("", vec!["vacua", CONIFOLD, CONIFOLD_W, "--verify", "5", "--seed", "17"]));
    cases.push(("", vec!["rep", "moment-map", CONIFOLD, CONIFOLD_REP, "--balance"]));
    cases.push(("", vec!["rep", "dim", CONIFOLD, "--seed", "3"]));
    cases.push(("", vec!["batch", "fixtures/batch"]));
    for (_, args) in cases {
        assert_eq!(stdout(&args), stdout(&args), "{args:?}");
    }
}

#[test]
fn conifold_classification_summary() {
    let report = json(&["classify", &fixture("conifold.json")]);
    assert_eq!(report["command"], "classify");
    assert_eq!(
        report["result"]["summary"],
        "IsolatedSingularity, cyclic=(2;[2,2]), dim=3, auslander=true"
    );
    assert_eq!(report["result"]["verdict"]["central_dim"], 3);
    assert_eq!(report["input_digest"].as_str().unwrap().len(), 64);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn one_loop_terminal_is_smooth() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loop.json");
    fs::write(
        &path,
        r#"{"vertices": 1, "arrows": [{"id": "a", "source": 1, "target": 1}], "dimension": [3]}"#,
    )
    .unwrap();
    let text = stdout(&["--format", "text", "classify", path.to_str().unwrap()]);
    assert!(text.lines().nth(1).unwrap().starts_with("Smooth"), "{text}");
}

#[test]
fn permuted_multiplicities_are_equivalent() {
    let report = json(&["etale-eq", &fixture("cyclic_2_3.json"), &fixture("cyclic_3_2.json")]);
    assert_eq!(report["result"]["equivalent"], true);
    assert_eq!(report["result"]["separating"], Value::Null);
}

#[test]
fn conifold_and_two_three_separate_at_m1() {
    let report = json(&["etale-eq", &fixture("conifold.json"), &fixture("cyclic_2_3.json")]);
    let sep = &report["result"]["separating"];
    assert_eq!(report["result"]["equivalent"], false);
    assert_eq!(sep["i"], 1);
    assert_eq!(sep["first"], "4");
    assert_eq!(sep["second"], "6");
}

#[test]
fn non_isolated_input_is_refused() {
    let out = quiverkit(&["etale-eq", &fixture("conifold.json"), &fixture("three_loops.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not comparable"));
}

#[test]
fn conifold_relations_are_four_and_vanish() {
    let report = json(&[
        "vacua",
        &fixture("conifold.json"),
        &fixture("conifold_superpotential.json"),
        "--verify",
        "20",
    ]);
    let result = &report["result"];
    assert_eq!(result["relations"].as_array().unwrap().len(), 4);
    // every arrow lies on a 2-cycle
    assert_eq!(result["cubic"], true);
    let rows = result["verification"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r["exact_zero"] == true && r["vanishes"] == true));
    assert_eq!(report["seed"], 0);
}

#[test]
fn zero_superpotential_has_no_relations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    fs::write(&path, r#"{"terms": []}"#).unwrap();
    let report = json(&["vacua", &fixture("conifold.json"), path.to_str().unwrap()]);
    assert_eq!(report["result"]["relations"], Value::Array(Vec::new()));
    assert_eq!(report["result"]["zero_derivatives"].as_array().unwrap().len(), 4);
}

#[test]
fn balancing_reaches_the_tolerance() {
    let report = json(&[
        "rep",
        "moment-map",
        &fixture("conifold.json"),
        &fixture("conifold_rep_y_zero.json"),
        "--balance",
        "--tol",
        "1e-6",
    ]);
    let b = &report["result"]["balance"];
    assert_eq!(b["converged"], true);
    assert!(b["norm"].as_f64().unwrap() <= 1e-6);
    assert!(b["invariant_drift"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn stability_witness_for_the_conifold_pair() {
    let args = |theta: &'static str| {
        vec![
            "rep".to_string(),
            "stability".into(),
            fixture("conifold.json"),
            fixture("conifold_rep_y_zero.json"),
            format!("--theta={theta}"),
        ]
    };
    let run = |theta| {
        let a = args(theta);
        json(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let unstable = run("1,-1");
    assert_eq!(unstable["result"]["stable"]["holds"], false);
    assert_eq!(unstable["result"]["stable"]["witness"], serde_json::json!([0, 1]));
    let stable = run("-1,1");
    assert_eq!(stable["result"]["stable"]["holds"], true);
    assert_eq!(stable["result"]["stable"]["exact"], true);
}

#[test]
fn numerical_dimension_matches_central_dimension() {
    for (file, expected) in [("conifold.json", 3), ("cyclic_2_3.json", 4)] {
        let report = json(&["rep", "dim", &fixture(file)]);
        assert_eq!(report["result"]["dimension"], expected, "{file}");
        assert_eq!(report["result"]["central_dim"], expected, "{file}");
    }
}

#[test]
fn empty_inputs_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let e = empty.to_str().unwrap();
    let c = fixture("conifold.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["classify", e],
        vec!["etale-eq", e, &c],
        vec!["vacua", e, &c],
        vec!["vacua", &c, e],
        vec!["strata", e],
        vec!["local-quiver", e, "--type", "[(1,[1])]"],
        vec!["simple", e],
        vec!["types", e],
        vec!["hilbert", e],
        vec!["rep", "check", &c, e, "--relations", e],
        vec!["rep", "stability", e, e, "--theta", "0"],
        vec!["rep", "moment-map", &c, e],
        vec!["rep", "dim", e],
    ];
    for args in cases {
        assert_eq!(exit_code(&args), 2, "{args:?}");
    }
}

#[test]
fn malformed_and_missing_inputs_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"vertices": 2, "arrows": [{"id": "x", "source": 1, "target": 5}], "dimension": [1, 1]}"#)
        .unwrap();
    let out = quiverkit(&["classify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(exit_code(&["classify", "no/such/file.json"]), 2);
    assert_eq!(exit_code(&["no-such-command"]), 2);
    let c = fixture("conifold.json");
    assert_eq!(exit_code(&["local-quiver", &c, "--type", "[(1,[1,0]"]), 2);
}

#[test]
fn refusals_exit_with_three() {
    let c = fixture("conifold.json");
    // the type does not add up to the dimension vector
    assert_eq!(exit_code(&["local-quiver", &c, "--type", "[(1,[1,0])]"]), 3);
    // weights must pair to zero with the dimension vector
    assert_eq!(exit_code(&["rep", "stability", &c, &fixture("conifold_rep_y_zero.json"), "--theta", "1,1"]), 3);
    assert_eq!(exit_code(&["hilbert", &fixture("two_loops_dim2.json")]), 3);
}

#[test]
fn batch_reports_every_file_and_the_worst_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("conifold.json"), dir.path().join("a.json")).unwrap();
    fs::write(dir.path().join("b.json"), "{").unwrap();
    let out = quiverkit(&["batch", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let summary = report["result"]["summary"].as_array().unwrap();
    assert_eq!(summary.len(), 2);
    assert_eq!(summary[0]["kind"], "IsolatedSingularity");
    assert_eq!(summary[1]["status"], "error");
}
