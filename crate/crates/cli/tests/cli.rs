use std::f64::consts::PI;
use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn revheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revheat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn phi_on_the_sphere_is_pi() {
    let v = json_of(&revheat(&["phi", "--profile", "sphere", "--nu", "0.5"]));
    assert!((v["phi"].as_f64().unwrap() - PI).abs() < 1e-12);
    assert!((v["constant"].as_f64().unwrap() - PI).abs() < 1e-12);
}

#[test]
fn phi_expansion_alias_reports_two_terms() {
    let v = json_of(&revheat(&["phi-expansion", "--profile", "ellipsoid:2,1"]));
    assert!((v["constant"].as_f64().unwrap() - PI / 2.0).abs() < 1e-12);
    assert!((v["linear"].as_f64().unwrap() - 3.0 * PI / 8.0).abs() < 1e-10);
}

#[test]
fn cubic_degeneracy_on_the_ellipsoid() {
    let v = json_of(&revheat(&["degeneracy", "--profile", "ellipsoid:2,1", "--what", "cubic"]));
    let fit = &v["fit"];
    assert!((fit["exponent"].as_f64().unwrap() - 3.0).abs() < 0.05);
    assert!((fit["constant"].as_f64().unwrap() / (3.0 * PI / 4.0) - 1.0).abs() < 0.01);
    assert!(fit["window"].is_array() && fit["residual"].is_number());
}

#[test]
fn segment_law_refuses_the_sphere() {
    let out = revheat(&["degeneracy", "--profile", "sphere", "--what", "segment"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "computation");
}

#[test]
fn invalid_input_exits_with_a_structured_report() {
    for args in [
        &["phi", "--profile", "cube"][..],
        &["phi", "--nu", "5"][..],
        &["heat", "--y", "a,1", "--t-grid", "1:0.5:3"][..],
        &["degeneracy", "--what", "quintic"][..],
    ] {
        let out = revheat(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], "invalid_config", "{args:?}");
    }
}

#[test]
fn geodesic_csv_starts_at_the_equator() {
    let out = revheat(&["geodesic", "--eta", "0.1", "--t-end", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,theta"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[2], 0.0);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
}

#[test]
fn s2_exact_forms_agree() {
    let out = revheat(&["s2-exact", "--t-grid", "0.05:2:5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let gap: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(gap.abs() < 1e-12, "{line}");
    }
}

#[test]
fn config_file_reproduces_flags_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let csv_a = dir.path().join("a.csv");
    let svg_a = dir.path().join("a.svg");
    let flags = [
        "heat",
        "--profile",
        "sphere",
        "--y",
        "a,2.5",
        "--n-max",
        "24",
        "--k-max",
        "24",
        "--grid",
        "513",
        "--seed",
        "11",
        "--csv",
        csv_a.to_str().unwrap(),
        "--svg",
        svg_a.to_str().unwrap(),
    ];
    let printed = revheat(&[&flags[..], &["--print-config"]].concat());
    assert!(printed.status.success());
    let text = String::from_utf8(printed.stdout).unwrap();
    assert!(text.contains("command = heat") && text.contains("seed = 11"));

    let direct = revheat(&flags);
    let csv_direct = fs::read(&csv_a).unwrap();
    let svg_direct = fs::read(&svg_a).unwrap();
    fs::remove_file(&csv_a).unwrap();

    let cfg = dir.path().join("heat.cfg");
    fs::write(&cfg, format!("# rerun\n{text}")).unwrap();
    let rerun = revheat(&["run", cfg.to_str().unwrap()]);
    assert!(direct.status.success() && rerun.status.success());
    assert_eq!(direct.stdout, rerun.stdout);
    assert_eq!(csv_direct, fs::read(&csv_a).unwrap());
    assert_eq!(svg_direct, fs::read(&svg_a).unwrap());
    let v: Value = serde_json::from_slice(&direct.stdout).unwrap();
    assert!(v["fit"]["window"].is_array());
    assert_eq!(v["n_samples"], 31);
}

#[test]
fn verify_all_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("verify.json");
    let out = revheat(&[
        "verify-all",
        "--n-max",
        "32",
        "--k-max",
        "32",
        "--grid",
        "513",
        "--json",
        json.to_str().unwrap(),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert_eq!(rows.len(), 9, "{text}");
    assert!(rows[7].contains("[8] heat-kernel exponent"));
    let report: Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    let failed = report["failed"].as_u64().unwrap();
    assert_eq!(out.status.code(), Some(if failed == 0 { 0 } else { 1 }));
    assert!(report["checks"][0].get("seconds").is_none());
}
