//! End-to-end checks of the command line contract: exit codes, report
//! schema, CSV shape, and scenario validation.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_srf")
}

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

#[test]
fn passing_scenario_exits_zero_with_valid_json() {
    let path = scenario_dir().join("flat-circle-static.toml");
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["all_pass"], true);
    assert!(doc["scenario_hash"].as_str().unwrap().starts_with("sha256:"));
    // emit then reload: parsing and re-serializing is lossless
    let round = serde_json::to_string_pretty(&doc).unwrap();
    let again: serde_json::Value = serde_json::from_str(&round).unwrap();
    assert_eq!(doc, again);
}

#[test]
fn violation_exits_one_with_witness() {
    let path = scenario_dir().join("shrinking-circle-wrong-sign.toml");
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_pass"], false);
    let check = &doc["checks"][0];
    assert_eq!(check["status"], "fail");
    assert!(check["details"]["witness"].is_object());
    assert!(check["min_slack"].as_f64().unwrap() < 0.0);
}

#[test]
fn config_error_exits_two() {
    // unknown key
    let dir = std::env::temp_dir().join("srf-cli-test-config");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[timegrid]\nstart = 0.0\nstop = 1.0\nsteps = 2\nbogus_key = 1\n").unwrap();
    let out = run(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // unknown op
    let bad_op = dir.join("bad-op.toml");
    std::fs::write(
        &bad_op,
        "[timegrid]\nstart = 0.0\nstop = 1.0\nsteps = 2\n\n[[checks]]\nop = \"no_such_op\"\n",
    )
    .unwrap();
    let out = run(&["verify", bad_op.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_check_list_gives_empty_passing_report() {
    let dir = std::env::temp_dir().join("srf-cli-test-empty");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("empty.toml");
    std::fs::write(&path, "[timegrid]\nstart = 0.0\nstop = 1.0\nsteps = 2\n").unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_pass"], true);
    assert_eq!(doc["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn csv_row_count_matches_slack_samples() {
    let path = scenario_dir().join("flat-circle-static.toml");
    let json_out = run(&["verify", path.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    let expected: usize = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["slack_rows"].as_array().unwrap().len())
        .sum();
    let csv_out = run(&["verify", path.to_str().unwrap(), "--format", "csv-slack-series"]);
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let rows = text.lines().count() - 1; // header
    assert_eq!(rows, expected);
    assert!(text.starts_with("check_id,t,pair_id,tau,slack"));
}

#[test]
fn ot_subcommand_filters_and_exports_couplings() {
    let dir = std::env::temp_dir().join("srf-cli-test-ot");
    std::fs::create_dir_all(&dir).unwrap();
    let prefix = dir.join("coupling");
    // scenario with coupling export enabled
    let src = std::fs::read_to_string(scenario_dir().join("flat-circle-static.toml")).unwrap();
    let src = src.replace(
        "id = \"distances\"\nop = \"wasserstein\"",
        &format!(
            "id = \"distances\"\nop = \"wasserstein\"\nexport_couplings = \"{}\"",
            prefix.display()
        ),
    );
    let path = dir.join("ot.toml");
    std::fs::write(&path, src).unwrap();
    let out = run(&["ot", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // only the transport-level ops survive the filter
    for c in doc["checks"].as_array().unwrap() {
        let op = c["op"].as_str().unwrap();
        assert!(op == "wasserstein" || op == "controls", "unexpected op {}", op);
    }
    // exported CSV matrix: 16 rows of 16 entries, marginals are the diracs
    let matrix = std::fs::read_to_string(format!("{}-pair0.csv", prefix.display())).unwrap();
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0].split(',').count(), 16);
}

#[test]
fn threads_flag_keeps_reports_identical() {
    let path = scenario_dir().join("flat-circle-static.toml");
    let seq = run(&["verify", path.to_str().unwrap()]);
    let par = run(&["verify", path.to_str().unwrap(), "--threads", "4"]);
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn tol_override_applies_everywhere() {
    // an absurdly large tolerance turns the failing scenario green
    let path = scenario_dir().join("shrinking-circle-wrong-sign.toml");
    let out = run(&["verify", path.to_str().unwrap(), "--tol", "1000"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn failing_check_does_not_abort_subsequent_checks() {
    let dir = std::env::temp_dir().join("srf-cli-test-isolation");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("isolation.toml");
    // first check fails (tight tolerance on the wrong-sign family), second passes
    std::fs::write(
        &path,
        r#"
[timegrid]
start = 0.0
stop = 0.2
steps = 2

[space]
builder = "circle"
n = 12
size = "12*sqrt(1-2*t)"

[weights]
expr = "0"

[[checks]]
id = "fails"
op = "super_ricci_strong"
t_index = 1
tau_points = 9
tol = 0.01

[[checks]]
id = "passes"
op = "controls"
"#,
    )
    .unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert_eq!(checks[0]["status"], "fail");
    assert_eq!(checks[1]["status"], "pass");
}
