use std::process::Command;

use serde_json::Value;

fn uniprod(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_uniprod"))
        .args(args)
        .env_remove("UNIPROD_OUT_DIR")
        .output()
        .expect("binary runs")
}

#[test]
fn malformed_pattern_exits_two() {
    let o = uniprod(&["derive", "--pattern", "phi2(a1 b1, a2 b2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("column"));
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(uniprod(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(uniprod(&["classify", "--order", "2"]).status.code(), Some(2));
    assert_eq!(uniprod(&["verify-mc", "--instance", "a9b2-a2b2"]).status.code(), Some(2));
}

#[test]
fn derive_reports_both_branches() {
    let o = uniprod(&["derive", "--pattern", "phi2(a1 b1, a2 b2)"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["schema_version"], "1.0");
    let last = doc["payload"]["items"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["monomials"].as_array().unwrap().len(), 9);
    assert_eq!(last["branches"].as_array().unwrap().len(), 2);
}

#[test]
fn text_rendering_goes_to_stdout() {
    let o = uniprod(&["explore", "--recheck", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
    assert!(serde_json::from_slice::<Value>(&o.stdout).is_err());
}

#[test]
fn output_directory_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_uniprod"))
        .args(["derive", "--pattern", "phi2(a1 b1, a2)", "--out", "rule.json"])
        .env("UNIPROD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("rule.json")).unwrap();
    let doc: Value = serde_json::from_str(&written).unwrap();
    assert_eq!(doc["invocation"]["command"], "derive");
}
