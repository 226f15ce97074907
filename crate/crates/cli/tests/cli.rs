use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn q2sat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_q2sat")).args(args).output().expect("binary runs")
}

fn q2sat_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_q2sat"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(p: &str, text: &str) {
    std::fs::write(Path::new(p), text).unwrap();
}

const GADGET: &str = r#"{"n":2,"terms":[
  {"qubits":[0],"rank":1,"states":[[[0,0],[1,0]]]},
  {"qubits":[1],"rank":1,"states":[[[0,0],[1,0]]]},
  {"qubits":[0,1],"rank":1,"states":[[[1,0],[0,0],[0,0],[1,0]]]}
]}"#;

#[test]
fn planted_solve_then_verify() {
    let dir = TempDir::new().unwrap();
    let (inst, sol) = (path(&dir, "p.json"), path(&dir, "s.json"));
    let g = q2sat(&["gen", "--kind", "planted", "--n", "100", "--seed", "3", "--out", &inst]);
    assert_eq!(g.status.code(), Some(0));
    let s = q2sat(&["solve", &inst, "--out", &sol]);
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let v = q2sat(&["verify", &inst, &sol]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains("max_energy"));
}

#[test]
fn gadget_is_unsat_with_cause() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "g.json");
    write(&inst, GADGET);
    let s = q2sat(&["solve", &inst]);
    assert_eq!(s.status.code(), Some(20));
    let out = String::from_utf8_lossy(&s.stdout);
    assert!(out.contains("\"unsat\"") && out.contains("cause"), "{out}");
    let o = q2sat(&["oracle", &inst]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict unsat"));
}

#[test]
fn ring_piped_to_solve() {
    let g = q2sat(&["gen", "--kind", "ring", "--n", "5", "--seed", "1"]);
    assert_eq!(g.status.code(), Some(0));
    let s = q2sat_stdin(&["solve"], &g.stdout);
    assert_eq!(s.status.code(), Some(0));
    let s = q2sat_stdin(&["solve", "-"], &g.stdout);
    assert_eq!(s.status.code(), Some(0));
}

#[test]
fn generation_is_deterministic() {
    for kind in ["2sat", "planted", "planted-entangled", "ring", "random"] {
        let a = q2sat(&["gen", "--kind", kind, "--n", "12", "--seed", "9"]);
        let b = q2sat(&["gen", "--kind", kind, "--n", "12", "--seed", "9"]);
        assert_eq!(a.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{kind}");
        let s1 = q2sat_stdin(&["solve"], &a.stdout);
        let s2 = q2sat_stdin(&["solve"], &a.stdout);
        assert_eq!(s1.stdout, s2.stdout, "{kind}");
    }
}

#[test]
fn verify_rejects_a_wrong_state() {
    let dir = TempDir::new().unwrap();
    let (inst, sol) = (path(&dir, "i.json"), path(&dir, "s.json"));
    write(&inst, r#"{"n":1,"terms":[{"qubits":[0],"rank":1,"states":[[[1,0],[0,0]]]}]}"#);
    write(&sol, r#"{"status":"sat","assignment":[{"qubits":[0],"state":[[1,0],[0,0]]}]}"#);
    assert_eq!(q2sat(&["verify", &inst, &sol]).status.code(), Some(1));
    write(&sol, r#"{"status":"sat","assignment":[{"qubits":[0],"state":[[0,0],[1,0]]}]}"#);
    assert_eq!(q2sat(&["verify", &inst, &sol]).status.code(), Some(0));
    write(&sol, r#"{"status":"sat","assignment":[]}"#);
    assert_eq!(q2sat(&["verify", &inst, &sol]).status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "bad.json");
    write(&inst, "{\"n\": 2, \"terms\": [");
    let s = q2sat(&["solve", &inst]);
    assert_eq!(s.status.code(), Some(2));
    assert!(!s.stderr.is_empty());
    assert_eq!(q2sat(&["solve", &path(&dir, "missing.json")]).status.code(), Some(2));
    assert_eq!(q2sat(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(q2sat(&["gen", "--kind", "ring", "--n", "2"]).status.code(), Some(2));
    assert_eq!(q2sat(&["bench", "--sizes", "ten"]).status.code(), Some(2));
}

#[test]
fn oracle_too_large_exits_thirty() {
    let g = q2sat(&["gen", "--kind", "ring", "--n", "11"]);
    let o = q2sat_stdin(&["oracle"], &g.stdout);
    assert_eq!(o.status.code(), Some(30));
}

#[test]
fn bench_writes_csv() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "b.csv");
    let b = q2sat(&["bench", "--kind", "ring", "--sizes", "1e2,1e3", "--csv", &csv]);
    assert_eq!(b.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,edges,steps,millis");
    assert_eq!(lines.len(), 3);
    let cols: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(cols[0], "1000");
    assert_eq!(cols[1], "2000");
    assert!(cols[3].parse::<f64>().is_ok());
}

#[test]
fn tolerance_flag_is_validated() {
    let g = q2sat(&["gen", "--kind", "ring", "--n", "4"]);
    assert_eq!(q2sat_stdin(&["solve", "--tol", "1e-6"], &g.stdout).status.code(), Some(0));
    assert_eq!(q2sat_stdin(&["solve", "--tol", "-1"], &g.stdout).status.code(), Some(2));
}
