use std::path::Path;
use std::process::{Command, Output};

fn wienerlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wienerlab")).args(args).arg("--out").arg(out).output().expect("running wienerlab")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("json file")).expect("valid json")
}

#[test]
fn constants_writes_manifest_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = wienerlab(&["constants"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("PASS constants"), "{stdout}");

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["operation"], "constants");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["pass"], true);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    let csv = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let p_col = header.iter().position(|h| *h == "p").unwrap();
    let k_col = header.iter().position(|h| *h == "k_inline").unwrap();
    let row = lines.map(|l| l.split(',').collect::<Vec<_>>()).find(|r| r[p_col].parse::<f64>().unwrap() == 2.0).unwrap();
    assert!((row[k_col].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    let table = read_json(&dir.path().join("constants.json"));
    assert_eq!(table["pass"], true);
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = wienerlab(&["wick", "--seed", "7", "--mc-samples", "20000"], dir.path());
    assert!(out.status.code().is_some_and(|c| c <= 1));
    assert_eq!(read_json(&dir.path().join("manifest.json"))["seed"], 7);
}

#[test]
fn empty_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"id": "bad", "operation": "constants", "seed": 1, "p_grid": []}"#).unwrap();
    let out = wienerlab(&["constants", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config-invalid") && stderr.contains("p_grid"), "{stderr}");
}

#[test]
fn missing_seed_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"id\": \"bad\",\n  \"operation\": \"constants\"\n}").unwrap();
    let out = wienerlab(&["constants", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn mismatched_operation_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wick.json");
    std::fs::write(&cfg, r#"{"id": "w", "operation": "wick", "seed": 1}"#).unwrap();
    let out = wienerlab(&["constants", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn product_symbol_files_have_portable_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = wienerlab(&["heat"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("manifest.json"));
    for c in manifest["checks"].as_array().unwrap() {
        let csv = c["csv"].as_str().unwrap();
        assert!(csv.chars().all(|ch| ch.is_ascii_alphanumeric() || "._-".contains(ch)), "{csv}");
        assert!(dir.path().join(csv).exists());
    }
}
