use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2torsion")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("l2torsion-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn trefoil_degree_matches_norm() {
    let out = run(&["degree", "--manifold", "trefoil"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["degree"], -1.0);
    assert_eq!(v["exact"], true);
    assert_eq!(v["thurston"]["verdict"], "EQUAL");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["command"]["manifold"], "trefoil");
}

#[test]
fn solid_torus_is_not_applicable() {
    let v = json(&run(&["degree", "--manifold", "s1xd2"]));
    assert_eq!(v["degree"], 1.0);
    assert_eq!(v["thurston"]["verdict"], "N/A");
}

#[test]
fn eval_writes_csv() {
    let out = run(&["eval", "--manifold", "s1xd2", "--grid", "log:-2:2:81"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,rho,exact"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().any(|&(t, r)| t == 1.0 && r == 0.0));
    for (t, r) in rows {
        assert!((r - t.ln().max(0.0)).abs() < 1e-12);
    }
}

#[test]
fn exact_runs_are_reproducible() {
    let a = run(&["eval", "--manifold", "figure8", "--grid", "log:-1:1:11"]);
    let b = run(&["eval", "--manifold", "figure8", "--grid", "log:-1:1:11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("l2torsion-cli-out-{}.json", std::process::id()));
    let out = run(&["degree", "--manifold", "figure8", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["degree"], -1.0);
    std::fs::remove_file(path).ok();
}

#[test]
fn check_passes_on_trefoil() {
    let out = run(&["check", "--manifold", "trefoil"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn tower_gap_gates_exit_status() {
    let out = run(&["tower", "--levels", "7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["max_final_gap"].as_f64().unwrap() < 1e-2);
    // three levels are too coarse for the default gap tolerance
    let out = run(&["tower", "--levels", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn catalog_lists_entries() {
    let v = json(&run(&["catalog"]));
    let names: Vec<&str> = v["entries"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"trefoil") && names.contains(&"figure8"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["eval", "--manifold", "s1xd2", "--grid", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["degree", "--manifold", "no-such-knot"]).status.code(), Some(2));
}

#[test]
fn non_acyclic_input_exits_three_with_certificate() {
    let path = scratch(
        "zero.json",
        r#"{"presentation": {"generators": ["a","b"], "relators": ["a b a B A B"]}, "matrix": [[[]]], "s": "a"}"#,
    );
    let out = run(&["eval", "--manifold", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let cert: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(cert["error"], "non-acyclic");
    assert_eq!(cert["certificate"]["kernel_dimension"], "1");
}

#[test]
fn presentation_file_is_accepted() {
    let path = scratch("trefoil.json", r#"{"generators": ["a","b"], "relators": ["a b a B A B"]}"#);
    let v = json(&run(&["degree", "--manifold", path.to_str().unwrap()]));
    assert_eq!(v["degree"], -1.0);
    // not a catalog entry, so there is no norm to compare with
    assert_eq!(v["thurston"]["verdict"], "N/A");
}
