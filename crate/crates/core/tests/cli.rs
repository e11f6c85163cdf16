use std::path::Path;
use std::process::{Command, Output};

fn hsdisp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsdisp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn homogenize_values_and_exit_codes() {
    let out = hsdisp(&[
        "homogenize",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--theta",
        "0.5",
        "--dim",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["m"].as_f64().unwrap() - 10.0 / 7.0).abs() < 1e-12);

    let out = hsdisp(&[
        "homogenize",
        "--alpha",
        "2",
        "--beta",
        "2",
        "--theta",
        "0.3",
        "--dim",
        "3",
    ]);
    assert_eq!(json(&out)["m"].as_f64().unwrap(), 2.0);

    let out = hsdisp(&[
        "homogenize",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--theta",
        "1.0",
        "--dim",
        "2",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));

    assert_eq!(code(&hsdisp(&["homogenize", "--alpha", "x"])), 2);
}

#[test]
fn environment_variables_set_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_hsdisp"))
        .arg("homogenize")
        .env("HSDISP_ALPHA", "1")
        .env("HSDISP_BETA", "2")
        .env("HSDISP_THETA", "0.5")
        .env("HSDISP_DIM", "3")
        .env("HSDISP_EMIT", "csv")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let m_row = text.lines().find(|l| l.starts_with("m,")).unwrap();
    let m: f64 = m_row[2..].parse().unwrap();
    assert!((m - 16.0 / 11.0).abs() < 1e-12);
}

#[test]
fn corrector_reports_consistent_system() {
    let out = hsdisp(&[
        "corrector",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--theta",
        "0.5",
        "--dim",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["rank_matrix"], 10);
    assert_eq!(v["rank_augmented"], 10);
    assert!((v["closed_form"]["b1"].as_f64().unwrap() + 1.0 / 7.0).abs() < 1e-12);
    assert_eq!(v["regular"]["d1"].as_f64().unwrap(), 0.0);
}

#[test]
fn dispersion_matches_pack_and_hand_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let pack = dir.path().join("p.json");
    let out = hsdisp(&[
        "pack",
        "--dim",
        "2",
        "--max-balls",
        "6",
        "--out",
        pack.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let packing = hsdisp::packing::load_packing(&pack).unwrap();

    let profile = [
        "--alpha", "1", "--beta", "2", "--theta", "0.5", "--dim", "2",
    ];
    let from_file = hsdisp(
        &[
            &["dispersion"],
            &profile[..],
            &["--packing-file", pack.to_str().unwrap()],
        ]
        .concat(),
    );
    let built = hsdisp(&[&["dispersion"], &profile[..], &["--apollonian", "6"]].concat());
    assert_eq!(code(&from_file), 0);
    let a = json(&from_file);
    assert_eq!(a, json(&built));

    let j = a["j_value"].as_f64().unwrap();
    let sum: f64 = packing.radii().iter().map(|r| r.powi(4)).sum();
    assert!((a["d_phs"].as_f64().unwrap() + j * sum).abs() < 1e-12);
    assert!(a["d_phs"].as_f64().unwrap() < 0.0);

    let hom = hsdisp(&[
        "dispersion",
        "--alpha",
        "2",
        "--beta",
        "2",
        "--theta",
        "0.5",
        "--dim",
        "2",
        "--apollonian",
        "6",
    ]);
    assert_eq!(json(&hom)["d_phs"].as_f64().unwrap(), 0.0);
}

fn write_overlapping(path: &Path) {
    std::fs::write(
        path,
        r#"{"dim": 2, "generator": "file", "balls": [
            {"center": [0.5, 0.5], "radius": 0.3},
            {"center": [0.1, 0.1], "radius": 0.2},
            {"center": [0.95, 0.5], "radius": 0.2}
        ]}"#,
    )
    .unwrap();
}

#[test]
fn overlapping_file_is_rejected_with_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    write_overlapping(&bad);
    let out = hsdisp(&[
        "dispersion",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--theta",
        "0.5",
        "--dim",
        "2",
        "--packing-file",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("overlap"), "{err}");
}

#[test]
fn pack_radii_match_apollonian_values() {
    let out = hsdisp(&["--emit", "csv", "pack", "--dim", "2", "--max-balls", "6"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let radii: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let third = (2f64.sqrt() - 1.0) * (2.0 * 2f64.sqrt() - 1.0) / 14.0;
    assert_eq!(radii.len(), 6);
    assert_eq!(radii[0], 0.5);
    assert!((radii[1] - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-3);
    assert!(radii[2..].iter().all(|r| (r - third).abs() < 1e-3));
}

#[test]
fn pack_budget_exceeded_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("partial.json");
    let out = hsdisp(&[
        "pack",
        "--dim",
        "2",
        "--max-balls",
        "3",
        "--target-coverage",
        "0.99",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(hsdisp::packing::load_packing(&out_path).unwrap().len(), 3);
}

#[test]
fn minimize_one_dimensional_exact() {
    let dir = tempfile::tempdir().unwrap();
    let radii = dir.path().join("r.csv");
    let out = hsdisp(&[
        "minimize",
        "--dim",
        "1",
        "--budget",
        "1",
        "--radii-file",
        radii.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["i_lower"].as_f64().unwrap(), -0.125);
    assert_eq!(v["i_upper"].as_f64().unwrap(), -0.125);
    assert!(std::fs::read_to_string(&radii)
        .unwrap()
        .starts_with("index,radius"));
}

#[test]
fn validate_rejects_unknown_suite_and_writes_report() {
    assert_eq!(code(&hsdisp(&["validate", "--suite", "everything"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("v.json");
    let out = hsdisp(&[
        "validate",
        "--suite",
        "bloch",
        "--seed",
        "3",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 3);
}

#[test]
fn config_file_unknown_key_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"alpha": 1, "colour": "red"}"#).unwrap();
    let out = hsdisp(&["--config", cfg.to_str().unwrap(), "homogenize"]);
    assert_eq!(code(&out), 2);
}
