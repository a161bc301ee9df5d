//! End-to-end tests that spawn the compiled binary and check the process
//! contract: one report on stdout, a human summary on stderr, `--output`
//! redirection, and the documented exit codes (0 certified/ok, 3 not
//! certified, 64 usage, 65 data).

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use sync_cert::graph::Graph;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sync-cert"))
        .args(args)
        .output()
        .expect("the binary spawns")
}

fn run_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sync-cert"))
        .args(args)
        .env(key, value)
        .output()
        .expect("the binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("the binary exits normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_graph(dir: &Path, name: &str, g: &Graph) -> String {
    let path = dir.join(name);
    std::fs::write(&path, g.to_edge_list()).expect("edge list writes");
    path.to_str().expect("utf-8 path").to_string()
}

#[test]
fn version_and_help_exit_zero() {
    let version = run(&["--version"]);
    assert_eq!(code(&version), 0);
    assert!(String::from_utf8_lossy(&version.stdout).contains("sync-cert"));

    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("certify"));
}

#[test]
fn certify_at_the_published_boundary_is_certified() {
    let out = run(&["certify", "--n", "1000000", "--p", "0.256"]);
    assert_eq!(code(&out), 0);

    let env = json(&out);
    assert_eq!(env["schema"], "v1");
    assert_eq!(env["command"], "certify");
    let result = &env["payload"]["result"];
    assert_eq!(result["verdict"], "certified");
    assert_eq!(result["method"], "theorem");
    let conditions = result["conditions"].as_array().expect("conditions array");
    assert_eq!(conditions.len(), 3);
    assert!(conditions.iter().all(|c| c["pass"] == true));
    assert!(stderr_text(&out).contains("CERTIFIED"));
}

#[test]
fn certify_past_the_boundary_exits_with_the_not_certified_code() {
    let out = run(&["certify", "--n", "1000000", "--p", "0.2", "--method", "theorem"]);
    assert_eq!(code(&out), 3);

    let env = json(&out);
    assert_eq!(env["payload"]["result"]["verdict"], "not_certified");
    let conditions = env["payload"]["result"]["conditions"]
        .as_array()
        .expect("conditions array");
    let failed: Vec<&str> = conditions
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["theorem.rounds_below_angle_budget"]);
    assert!(stderr_text(&out).contains("NOT CERTIFIED"));
}

#[test]
fn density_autodetection_certifies_a_complete_graph() {
    let dir = tempfile::tempdir().expect("temp dir");
    let file = write_graph(dir.path(), "k12.el", &Graph::complete(12, true).unwrap());

    let out = run(&["certify", "--graph", &file, "--p", "auto"]);
    assert_eq!(code(&out), 0);

    let env = json(&out);
    assert_eq!(env["payload"]["input"]["p"], 1.0);
    assert_eq!(env["payload"]["graph"]["density"], 1.0);
    assert_eq!(env["payload"]["result"]["confidence"], 1.0);
}

#[test]
fn usage_errors_exit_sixty_four_and_keep_stdout_clean() {
    let cases: &[&[&str]] = &[
        &["certify"],
        &["certify", "--n", "10", "--p", "1.5"],
        &["certify", "--n", "10", "--p", "abc"],
        &["simulate", "--n", "10", "--p", "0.5", "--trials", "0"],
        &["certify", "--n", "10", "--p", "auto"],
        &["--bogus"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(code(&out), 64, "args {args:?}");
        assert!(out.stdout.is_empty(), "args {args:?} wrote to stdout");
        assert!(!out.stderr.is_empty(), "args {args:?} left stderr empty");
    }
}

#[test]
fn unreadable_and_malformed_graphs_exit_sixty_five() {
    let missing = run(&["certify", "--graph", "/no/such/file.el", "--p", "auto"]);
    assert_eq!(code(&missing), 65);

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("bad.el");
    // Vertex 3 is out of range for a declared size of 2.
    std::fs::write(&path, "2\n1 3\n").expect("file writes");
    let malformed = run(&["certify", "--graph", path.to_str().unwrap(), "--p", "auto"]);
    assert_eq!(code(&malformed), 65);
}

#[test]
fn simulate_on_a_cycle_synchronizes_and_passes_the_suite() {
    let dir = tempfile::tempdir().expect("temp dir");
    let file = write_graph(dir.path(), "c10.el", &Graph::cycle(10).unwrap());

    let out = run(&["simulate", "--graph", &file, "--trials", "6", "--seed", "1"]);
    assert_eq!(code(&out), 0);

    let env = json(&out);
    let payload = &env["payload"];
    assert_eq!(payload["p"], 0.2); // density of C10 with no loops
    let summary = &payload["summary"];
    assert_eq!(summary["trials"], 6);
    assert_eq!(summary["converged"], 6);
    assert_eq!(summary["stable"], 6);
    assert_eq!(summary["suites_run"], summary["suites_passed"]);
    let records = payload["records"].as_array().expect("records array");
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r["suite_pass"] == true));
}

#[test]
fn threshold_reproduces_the_pinned_search_point() {
    let out = run(&["threshold", "--n", "10000"]);
    assert_eq!(code(&out), 0);

    let env = json(&out);
    let result = &env["payload"]["result"];
    assert_eq!(result["p_star"], 0.330078125);
    let probes = result["probes"].as_array().expect("probes array");
    assert!(probes.iter().any(|pr| pr["certified"] == true));
    assert!(probes.iter().any(|pr| pr["certified"] == false));
    // The reported threshold is the smallest certified probe.
    let smallest_certified = probes
        .iter()
        .filter(|pr| pr["certified"] == true)
        .map(|pr| pr["p"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(smallest_certified, 0.330078125);
}

#[test]
fn csv_projection_prints_metadata_then_rows() {
    let out = run(&["spectral", "--n", "4000", "--p", "0.1", "--format", "csv"]);
    assert_eq!(code(&out), 0);

    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# source=Formula"));
    assert_eq!(lines.next(), Some("n,p,norm_a,norm_l,confidence"));
    // Shortest round-trip rendering of f(4000, 0.1) and its double.
    assert_eq!(
        lines.next(),
        Some("4000,0.1,120.344740566126,240.689481132252,0.999")
    );
}

#[test]
fn output_flag_writes_the_report_to_disk() {
    let dir = tempfile::tempdir().expect("temp dir");
    let json_path = dir.path().join("report.json");

    let out = run(&[
        "certify", "--n", "1000000", "--p", "0.256",
        "--output", json_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty(), "report should go to the file");
    assert!(stderr_text(&out).contains("CERTIFIED"));
    let saved: Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(saved["schema"], "v1");

    let csv_path = dir.path().join("report.csv");
    let out = run(&[
        "certify", "--n", "1000000", "--p", "0.256",
        "--format", "csv", "--output", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let saved = std::fs::read_to_string(&csv_path).unwrap();
    assert!(saved.starts_with("# verdict=Certified"));
}

#[test]
fn reproduce_table_attaches_references_and_ratios() {
    let out = run(&["reproduce-table", "--n-list", "10000"]);
    assert_eq!(code(&out), 0);

    let env = json(&out);
    let rows = env["payload"]["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["n"], 10000);
    assert_eq!(rows[0]["reference"], 0.33237);
    let ratio = rows[0]["ratio"].as_f64().expect("ratio present");
    assert!((0.9..=1.05).contains(&ratio), "ratio {ratio}");
    let note = env["payload"]["note"].as_str().expect("note present");
    assert!(note.contains("Out of scope by design"));
}

#[test]
fn thread_cap_variable_is_a_safe_knob() {
    // A valid cap and an unparsable one must both leave results unchanged:
    // the variable only sizes the worker pool.
    let base = run(&["spectral", "--n", "200", "--p", "0.5"]);
    let capped = run_with_env(&["spectral", "--n", "200", "--p", "0.5"], "SYNC_CERT_THREADS", "1");
    let garbled = run_with_env(
        &["spectral", "--n", "200", "--p", "0.5"],
        "SYNC_CERT_THREADS",
        "not-a-number",
    );
    assert_eq!(code(&base), 0);
    assert_eq!(code(&capped), 0);
    assert_eq!(code(&garbled), 0);
    assert_eq!(base.stdout, capped.stdout);
    assert_eq!(base.stdout, garbled.stdout);
}
