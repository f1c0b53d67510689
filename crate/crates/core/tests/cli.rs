use std::process::{Command, Output};

use serde_json::Value;

fn loopgas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopgas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn table1_all_rows_match() {
    let out = loopgas(&["table1", "--all", "--level", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 9, "{text}");
    assert!(!text.contains("MISMATCH"));
}

#[test]
fn tile_then_classes_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let tile = dir.path().join("b.json");
    let classes = dir.path().join("c.json");
    let out = loopgas(&["tile", "--brick", "4,3,2", "--out", tile.to_str().unwrap()]);
    assert!(out.status.success());
    let out = loopgas(&[
        "classes",
        "--tiling",
        tile.to_str().unwrap(),
        "--level",
        "3",
        "--out",
        classes.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&classes).unwrap()).unwrap();
    assert_eq!(report["n"], 12);
    assert_eq!(report["classes"], 8);
    assert_eq!(report["lonely"], 2);
    let sizes = report["class_sizes"].as_array().unwrap();
    assert_eq!(sizes.iter().map(|v| v.as_u64().unwrap()).sum::<u64>(), 4096);
}

#[test]
fn named_classes_carry_the_published_row() {
    let report = json(&loopgas(&["classes", "--tiling", "hex12b", "--level", "3"]));
    assert_eq!(report["classes"], 17);
    assert_eq!(report["table1_row"], serde_json::json!([17, 12]));
}

#[test]
fn groundstate_residuals_vanish() {
    let report = json(&loopgas(&["groundstate", "--tiling", "hex9", "--level", "2"]));
    assert_eq!(report["classes"].as_array().unwrap().len(), 5);
    assert!(report["max_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["typeg_convention"], "canonical-once");
}

#[test]
fn spectrum_reports_solver_metadata() {
    let report = json(&loopgas(&[
        "spectrum", "--tiling", "hex7", "--level", "3", "--eps", "0", "--k", "8", "--seed", "5",
    ]));
    assert_eq!(report["solver"]["seed"], 5);
    assert_eq!(report["solver"]["tol"], 1e-10);
    assert_eq!(report["gap"]["multiplet_size"], 5);
    assert_eq!(report["multiplets"][0], 5);
}

#[test]
fn spectrum_vectors_give_lonely_overlaps() {
    let report = json(&loopgas(&[
        "spectrum", "--tiling", "hex12b", "--eps", "0.05", "--k", "14", "--vectors",
    ]));
    let overlaps = report["lonely_overlaps"].as_array().unwrap();
    assert_eq!(overlaps.len(), 14);
    // The twelve negative states live mostly on the lonely configurations.
    let values: Vec<f64> = overlaps.iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(values[..12].iter().all(|&w| w > 0.9), "{values:?}");
    assert!(values[12] < 0.5, "{values:?}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let summary = json(&loopgas(&[
        "sweep", "--tiling", "hex7", "--level", "3", "--eps-start", "0", "--eps-end", "0.2",
        "--steps", "3", "--k", "6", "--seed", "1", "--out", csv.to_str().unwrap(),
    ]));
    assert_eq!(summary["points"], 3);
    assert_eq!(summary["solver"]["seed"], 1);
    assert_eq!(summary["warm_start"], true);
    assert_eq!(summary["flip_sectors"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,rank,eigenvalue,converged,residual");
    assert_eq!(lines.len(), 1 + 3 * 6);
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn verify_dense_passes_and_is_capped() {
    let report = json(&loopgas(&["verify", "--tiling", "hex9", "--level", "3", "--dense"]));
    assert_eq!(report["passed"], true);
    assert_eq!(report["dense"]["kernel_dimension"], 5);
    let out = loopgas(&["verify", "--tiling", "hex15a", "--dense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at most 12"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = loopgas(&["tile", "--brick", "2,3,0", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    let out = loopgas(&["classes", "--tiling", "hex99"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown tiling"));
    let out = loopgas(&["spectrum", "--tiling", "hex7", "--level", "0"]);
    assert_eq!(out.status.code(), Some(2));
}
