//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line. Run with `--nocapture` to see the lines.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};

use wienerlab_cli::suite;

const SEED: u64 = 42;

fn criterion(id: u8) {
    let c = suite::run_criterion(id, SEED).unwrap_or_else(|e| panic!("criterion {id} errored: {e:#}"));
    println!("{}", c.line());
    if !c.pass {
        let last = c.table.headers.len() - 1;
        for row in c.table.rows.iter().filter(|r| r[last] == "false").take(20) {
            println!("  {}", row.join(","));
        }
    }
    assert!(c.pass, "{}", c.line());
}

#[test]
fn c01_constants() {
    criterion(1);
}

#[test]
fn c02_wick() {
    criterion(2);
}

#[test]
fn c03_moments() {
    criterion(3);
}

#[test]
fn c04_translation() {
    criterion(4);
}

#[test]
fn c05_heat_closed_forms() {
    criterion(5);
}

#[test]
fn c06_semigroup() {
    criterion(6);
}

#[test]
fn c07_commutation() {
    criterion(7);
}

#[test]
fn c08_generator_expansion() {
    criterion(8);
}

#[test]
fn c09_extension_rates() {
    criterion(9);
}

#[test]
fn c10_projection_derivative() {
    criterion(10);
}

#[test]
fn c11_prodscal_nm() {
    criterion(11);
}

#[test]
fn c12_covariance() {
    criterion(12);
}

#[test]
fn c13_multiplication_commutator() {
    criterion(13);
}

#[test]
fn c14_holder_telescoping() {
    criterion(14);
}

#[test]
fn c15_laplacian_basis() {
    criterion(15);
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("csv")))
        .collect()
}

fn verify_all(out: &Path) -> bool {
    let status = Command::new(env!("CARGO_BIN_EXE_wienerlab"))
        .args(["verify-all", "--seed", &SEED.to_string(), "--out"])
        .arg(out)
        .stdout(Stdio::null())
        .status()
        .expect("running wienerlab");
    assert!(status.code().is_some_and(|c| c <= 1), "verify-all errored: {status}");
    status.success()
}

#[test]
fn c16_determinism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first_pass = verify_all(&a);
    verify_all(&b);
    let (left, right) = (csv_files(&a), csv_files(&b));
    let differing: Vec<&String> = left.keys().filter(|k| left.get(*k) != right.get(*k)).collect();
    let pass = !left.is_empty() && left.len() == right.len() && differing.is_empty();
    let line = format!(
        "{} {}: {} CSV files compared, {} differ, in-run suite {}",
        if pass { "PASS" } else { "FAIL" },
        suite::check_name(16),
        left.len(),
        differing.len(),
        if first_pass { "passed" } else { "failed" },
    );
    println!("{line}");
    assert!(pass, "{line}: {differing:?}");
}
