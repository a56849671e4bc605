use serde_json::Value;
use std::process::{Command, Output};

fn qostbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qostbc")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = qostbc(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn divprod_q4_lt() {
    let v = json(&["divprod", "--code", "Q4_LT", "--mod", "4qam"]);
    assert!((v["zeta"].as_f64().unwrap() - 0.3344).abs() < 1e-3);
    assert_eq!(v["full_diversity"], true);
    assert_eq!(v["symbols_per_group"], 2);
}

#[test]
fn analyze_q4_grouping_and_table() {
    let v = json(&["analyze", "--code", "Q4"]);
    assert_eq!(v["grouping"], serde_json::json!([[1, 4], [2, 3], [5, 8], [6, 7]]));
    let table = v["qo_table"].as_array().unwrap();
    assert_eq!(table.len(), 8);
    // s1 and s4 interfere, s1 and s2 do not
    assert_eq!(table[0][3], false);
    assert_eq!(table[0][1], true);
}

#[test]
fn transform_round_trips_through_code_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q4lt.json");
    let p = path.to_str().unwrap();
    let out = qostbc(&["transform", "--code", "Q4", "--gclt-theta", "13.2825", "--out", p]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["transform"]["theta_rad"].as_f64().unwrap() - 13.2825f64.to_radians()).abs() < 1e-12);
    let d = json(&["divprod", "--code-file", p]);
    assert!((d["zeta"].as_f64().unwrap() - 0.3344).abs() < 1e-3);
    let a = json(&["analyze", "--code-file", p]);
    assert_eq!(a["grouping"], serde_json::json!([[1, 4], [2, 3], [5, 8], [6, 7]]));
}

#[test]
fn cr_transform_matches_catalog() {
    let t = json(&["transform", "--code", "Q4", "--cr-angle", "45", "--cr-symbols", "3,4"]);
    let c = json(&["catalog", "--code", "Q4_CR"]);
    assert_eq!(t["matrices"], c["matrices"]);
}

#[test]
fn simulate_is_byte_identical() {
    let args = ["simulate", "--code", "Q4_LT", "--mod", "4qam", "--nr", "1", "--snr", "0:2:20", "--seed", "7", "--max-frames", "20000"];
    let a = qostbc(&args);
    let b = qostbc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# code=Q4_LT"));
    assert_eq!(text.lines().filter(|l| l.starts_with("Q4_LT,")).count(), 11);
}

#[test]
fn simulate_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ber.csv");
    let svg = dir.path().join("ber.svg");
    let out = qostbc(&[
        "simulate", "--code", "Q4", "--code", "G4C:16qam", "--snr", "0:5:10", "--max-frames", "5000",
        "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("code,")).count(), 1);
    assert!(text.contains("G4C,16qam"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn sweep_theta_csv_has_case_columns() {
    let out = qostbc(&["sweep-theta", "--mod", "16qam", "--start", "10", "--stop", "15", "--step", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("theta_deg,min_det,min_det_norm,case_m1_n1"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn exit_codes() {
    assert_eq!(qostbc(&["bogus"]).status.code(), Some(1));
    assert_eq!(qostbc(&["divprod", "--code", "Q9"]).status.code(), Some(1));
    assert_eq!(qostbc(&["divprod", "--mod", "8qam"]).status.code(), Some(1));
    assert_eq!(qostbc(&["mindet", "--code", "T8", "--scope", "full"]).status.code(), Some(3));
    assert_eq!(qostbc(&["--version"]).status.code(), Some(0));
    assert_eq!(qostbc(&["verify"]).status.code(), Some(0));
}

#[test]
fn failed_command_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = qostbc(&["mindet", "--code", "T8", "--scope", "full", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn search_t8_reports_both_units() {
    let v = json(&["search-t8", "--starts", "1", "--seed", "3", "--workers", "1"]);
    let deg = v["angles_deg"].as_array().unwrap();
    let rad = v["angles_rad"].as_array().unwrap();
    assert_eq!(deg.len(), 6);
    for (d, r) in deg.iter().zip(rad) {
        assert!((d.as_f64().unwrap().to_radians() - r.as_f64().unwrap()).abs() < 1e-12);
    }
    assert!(v["zeta"].as_f64().unwrap() > 0.1);
}
