use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hodograph")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn output_is_deterministic() {
    let a = run(&["demo", "ex61", "catastrophe", "--format", "json"]);
    let b = run(&["demo", "ex61", "catastrophe", "--format", "json"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let c = run(&["demo", "ex72", "timeline", "--format", "csv"]);
    let d = run(&["demo", "ex72", "timeline", "--format", "csv"]);
    assert_eq!(c.1, d.1);
}

#[test]
fn catastrophe_json_keys() {
    let (code, out, _) = run(&["demo", "ex81", "catastrophe", "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["t_c", "u_c", "x_c", "branch_kind", "schema_version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["schema_version"], 1);
    assert!((v["t_c"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn empty_locus_is_header_only() {
    let (code, out, _) = run(&["demo", "ex61", "map-scan", "--t", "0.5", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(out, "t,u1,u2\r\n");
}

#[test]
fn fold_region_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fold.csv");
    let p = path.to_str().unwrap();
    let (code, _, err) = run(&["demo", "ex64", "characteristics", "--t", "0.9", "--format", "csv", "--out", p]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("t,x,y\r\n"));
    assert!(csv.lines().count() > 10);
    let sidecar = std::fs::read_to_string(dir.path().join("fold.segments.json")).unwrap();
    let v: Value = serde_json::from_str(&sidecar).unwrap();
    assert!(!v["segments"].as_array().unwrap().is_empty());
}

#[test]
fn problem_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("burgers.toml");
    std::fs::write(
        &path,
        "dimension = 2\nhodograph = [\"-atanh(u) + 2*atanh(v)\", \"atanh(u) - atanh(v)\"]\n\
         [domain]\nlower = [-1, -1]\nupper = [1, 1]\n",
    )
    .unwrap();
    let (code, out, err) = run(&["catastrophe", "--file", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["t_c"].as_f64().unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["demo", "nonesuch"]).0, 1);
    assert_eq!(run(&["catastrophe"]).0, 1);
    assert_eq!(run(&["--bogus"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    // no positive branch anywhere: numerical failure
    assert_eq!(run(&["demo", "ex62", "catastrophe", "--param", "eps=0.5"]).0, 2);
    assert_eq!(run(&["demo", "ex62", "--param", "nope=1"]).0, 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "dimension = 2\nhodograph = [\"u +* v\", \"v\"]\n[domain]\nlower = [-1, -1]\nupper = [1, 1]\n").unwrap();
    let (code, _, err) = run(&["branches", "--file", path.to_str().unwrap(), "--at", "0,0"]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn demo_listing_names_every_demo() {
    let (code, out, _) = run(&["demo"]);
    assert_eq!(code, 0);
    for name in ["ex61", "ex62", "ex63", "ex64", "ex71", "ex72", "ex73", "ex81", "ex82"] {
        assert!(out.contains(name), "{name}");
    }
}
