use std::path::Path;
use std::process::Command;

use logsphere::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("logsphere").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tbp.json");
    let (code, _, _) = run(&["construct", "--partition", "3,2", "--out", path_str(&file)]);
    assert_eq!(code, 0);
    let (code, out, _) = run(&["verify", path_str(&file)]);
    assert_eq!(code, 0);
    assert!(out.contains("< 1e-10, class=TwoSimplex(3,2)"), "{out}");
}

#[test]
fn verify_is_reproducible_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("c.json");
    let csv = dir.path().join("c.csv");
    run(&["construct", "--random", "--dim", "4", "--seed", "9", "--out", path_str(&json)]);
    run(&["construct", "--random", "--dim", "4", "--seed", "9", "--out", path_str(&csv)]);
    let a = run(&["verify", path_str(&json), "--format", "csv"]);
    let b = run(&["verify", path_str(&csv), "--format", "csv"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let c = run(&["verify", path_str(&json), "--format", "csv"]);
    assert_eq!(a.1, c.1);
}

#[test]
fn morse_named_points() {
    let (code, out, _) = run(&["morse", "--critical", "C1"]);
    assert_eq!(code, 0);
    assert!(out.contains("index=1 nullity=0"), "{out}");
    let (_, out, _) = run(&["morse", "--critical", "C0"]);
    assert!(out.contains("index=2 nullity=0"));
    let (_, out, _) = run(&["morse", "--critical", "C2", "--general"]);
    assert!(out.contains("index=0 nullity=0 orbit_dim=3"), "{out}");
}

#[test]
fn crossover_and_sweep() {
    let (code, out, _) = run(&["crossover", "--lo", "15.0", "--hi", "15.1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("s*=15.0480"), "{out}");
    let (code, _, err) = run(&["crossover", "--lo", "1", "--hi", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("no sign change"));
    let (code, out, _) = run(&["sweep", "--from", "14", "--to", "16", "--step", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 6);
    assert!(out.starts_with("s,e_tbp,t_star,e_fp_opt,gap"));
}

#[test]
fn classify_and_energy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fp.json");
    run(&["construct", "--partition", "1,2,2", "--out", path_str(&file)]);
    let (code, out, _) = run(&["classify", path_str(&file)]);
    assert_eq!(code, 0);
    assert!(out.contains("class=Pyramid([1,2,2])"), "{out}");
    let (code, out, _) = run(&["energy", path_str(&file), "--potential", "riesz:1", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["energy"].as_f64().unwrap() > 0.0);
}

#[test]
fn escape_and_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let pent = dir.path().join("pent.json");
    let moved = dir.path().join("moved.csv");
    run(&["construct", "--polygon", "5", "--dim", "3", "--out", path_str(&pent)]);
    let (code, out, _) = run(&["escape", path_str(&pent), "--theta", "0.5", "--out", path_str(&moved)]);
    assert_eq!(code, 0);
    assert!(out.contains("energy_delta=-"), "{out}");
    assert!(moved.exists());
    let trace = dir.path().join("trace.csv");
    let (code, out, _) = run(&["optimize", path_str(&moved), "--trace", path_str(&trace)]);
    assert_eq!(code, 0);
    assert!(out.contains("class=TwoSimplex(3,2)"), "{out}");
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iter,energy,grad_norm"));
}

#[test]
fn seeds_determine_outputs() {
    let a = run(&["basin", "--dim", "3", "--trials", "6", "--seed", "3", "--format", "csv"]);
    let b = run(&["basin", "--dim", "3", "--trials", "6", "--seed", "3", "--format", "csv", "--jobs", "1"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let c = run(&["basin", "--dim", "3", "--trials", "6", "--seed", "4", "--format", "csv"]);
    assert_ne!(a.1, c.1);
}

#[test]
fn path_csv() {
    let (code, out, _) = run(&["path", "--k", "2", "--m", "3", "--points", "11"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 12);
    let (code, _, _) = run(&["path", "--k", "1", "--m", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["energy", "/definitely/missing.json"]).0, 2);
    assert_eq!(run(&["construct", "--partition", "3,2", "--potential", "riesz"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    run(&["construct", "--random", "--dim", "3", "--out", path_str(&file)]);
    // Morse index of a non-critical configuration is a numeric failure
    assert_eq!(run(&["morse", path_str(&file)]).0, 3);
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_logsphere");
    let out = Command::new(bin).args(["morse", "--critical", "C1"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("index=1 nullity=0"));
    let bad = Command::new(bin).args(["crossover", "--lo", "1", "--hi", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
