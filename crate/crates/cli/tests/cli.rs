use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn posthoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posthoc"))
        .args(args)
        .env_remove("POSTHOC_ORACLE_CAP")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn num(v: &Value, path: &str) -> f64 {
    v.pointer(path)
        .and_then(Value::as_f64)
        .unwrap_or_else(|| panic!("no number at {path} in {v}"))
}

#[test]
fn inspect_lists_terms_by_weight() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "h.circ", "qubits 1\noutput 0\nH 0\n");
    let out = posthoc(&["inspect", "--circuit", s(&c), "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "coefficient,string,pi,sign,locality");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,I,"));
    let pis: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    for (p, e) in pis.iter().zip([0.4531, 0.2265, 0.1602, 0.1602]) {
        assert!((p - e).abs() < 1e-4);
    }

    let out = posthoc(&["inspect", "--circuit", s(&c)]);
    assert_eq!(json(&out)["xz_only"], true);
}

#[test]
fn missing_output_line_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "bad.circ", "qubits 2\nH 0\n");
    let out = posthoc(&["inspect", "--circuit", s(&c)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error") && err.contains("line"), "{err}");
}

#[test]
fn bad_flags_exit_two() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    assert_eq!(
        posthoc(&["run", "--circuit", s(&c), "--rounds", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        posthoc(&["run", "--circuit", s(&c), "--strategy", "sneaky"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        posthoc(&["run", "--circuit", s(&c), "--epsilon", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        posthoc(&["energy", "--circuit", s(&c), "--format", "csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        posthoc(&["energy", "--circuit", s(&dir.path().join("nope"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn energy_reports_soundness_side() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let member = json(&posthoc(&["energy", "--circuit", s(&c)]));
    assert!(num(&member, "/energies/ground").abs() < 1e-10);
    assert_eq!(num(&member, "/energies/history"), 0.0);
    assert!((num(&member, "/p_acc/at_history") - 0.5).abs() < 1e-12);

    let nonmember = json(&posthoc(&[
        "energy",
        "--circuit",
        s(&c),
        "--claim",
        "nonmember",
    ]));
    assert!(num(&nonmember, "/energies/ground") > 1e-3);
    assert!(num(&nonmember, "/p_acc/at_ground") < 0.5);
}

#[test]
fn energy_respects_cap_variable() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let out = Command::new(env!("CARGO_BIN_EXE_posthoc"))
        .args(["energy", "--circuit", s(&c)])
        .env("POSTHOC_ORACLE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('3'));
}

#[test]
fn run_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "bell.circ", "qubits 2\noutput 1\nH 0\nCNOT 0 1\n");
    let base = [
        "run",
        "--circuit",
        s(&c),
        "--rounds",
        "5000",
        "--seed",
        "11",
        "--threshold",
        "0.4",
    ];
    let first = posthoc(&[&base[..], &["--workers", "1"]].concat());
    assert!(first.status.success());
    for workers in ["1", "2", "7"] {
        let again = posthoc(&[&base[..], &["--workers", workers]].concat());
        assert_eq!(first.stdout, again.stdout, "workers = {workers}");
    }
    let other_seed = posthoc(&[
        "run",
        "--circuit",
        s(&c),
        "--rounds",
        "5000",
        "--seed",
        "12",
        "--threshold",
        "0.4",
    ]);
    assert_ne!(first.stdout, other_seed.stdout);
}

#[test]
fn honest_run_tracks_exact_probability() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let doc = json(&posthoc(&[
        "run",
        "--circuit",
        s(&c),
        "--rounds",
        "10000",
        "--seed",
        "3",
    ]));
    let (p_hat, p) = (num(&doc, "/p_hat"), num(&doc, "/p_exact"));
    assert!((p_hat - p).abs() <= 4.0 * (p * (1.0 - p) / 1e4).sqrt());
    assert_eq!(doc["verdict"], "accept");
}

#[test]
fn cheating_run_falls_below_honest_by_the_gap() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let honest = json(&posthoc(&[
        "run",
        "--circuit",
        s(&c),
        "--rounds",
        "100000",
        "--seed",
        "5",
    ]));
    // The complement circuit is the no-instance; its member Hamiltonian
    // is what a cheating prover faces.
    let no = write(&dir, "no.circ", "qubits 1\noutput 0\nX 0\nX 0\n");
    let cheat = json(&posthoc(&[
        "run",
        "--circuit",
        s(&no),
        "--strategy",
        "ground_state",
        "--rounds",
        "100000",
        "--seed",
        "5",
    ]));
    let gap = num(&honest, "/gap");
    assert!((num(&honest, "/p_exact") - num(&cheat, "/p_exact") - gap).abs() < 1e-10);
    let diff = num(&honest, "/p_hat") - num(&cheat, "/p_hat");
    assert!(
        (diff - gap).abs() < 4.0 * (0.5f64 / 1e5).sqrt(),
        "diff {diff}, gap {gap}"
    );
}

#[test]
fn auto_rounds_use_reported_gap() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let doc = json(&posthoc(&[
        "run",
        "--circuit",
        s(&c),
        "--rounds",
        "auto",
        "--epsilon",
        "0.05",
    ]));
    let gap = num(&doc, "/gap");
    let expected = (2.0 * (2.0f64 / 0.05).ln() / (gap * gap)).ceil();
    assert_eq!(num(&doc, "/n_rounds"), expected);
}

#[test]
fn fixed_state_strategy_reads_file() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    // |data=1, clock=1>: the final history component alone.
    let st = write(&dir, "w.state", "qubits 2\n3 1 0\n");
    let strategy = format!("fixed_state,{}", s(&st));
    let doc = json(&posthoc(&[
        "run",
        "--circuit",
        s(&c),
        "--strategy",
        &strategy,
        "--rounds",
        "100",
    ]));
    assert!(num(&doc, "/p_exact") > 0.0);
    let wrong = write(&dir, "wrong.state", "qubits 3\n0 1 0\n");
    let strategy = format!("fixed_state,{}", s(&wrong));
    assert_eq!(
        posthoc(&["run", "--circuit", s(&c), "--strategy", &strategy])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn decide_shows_both_claims() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let out = posthoc(&[
        "decide",
        "--circuit",
        s(&c),
        "--strategy",
        "ground_state",
        "--format",
        "text",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let member = text.lines().find(|l| l.starts_with("member")).unwrap();
    let nonmember = text.lines().find(|l| l.starts_with("nonmember")).unwrap();
    assert!(member.ends_with("accept"), "{text}");
    assert!(nonmember.ends_with("reject"), "{text}");
}

#[test]
fn oracle_passes_and_catches_faults() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "t.circ",
        "qubits 3\noutput 2\nH 0\nH 1\nTOFFOLI 0 1 2\n",
    );
    let ok = posthoc(&["oracle", "--circuit", s(&c)]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(json(&ok)["passed"], true);

    let y = posthoc(&["oracle", "--circuit", s(&c), "--inject", "y-term"]);
    assert_eq!(y.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&y.stderr).contains("xz_only"));

    let tampered = posthoc(&["oracle", "--circuit", s(&c), "--inject", "tamper=1e-3"]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stderr).contains("matrix_reconstruction"));
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "x.circ", "qubits 1\noutput 0\nX 0\n");
    let target = dir.path().join("report.json");
    let out = posthoc(&["energy", "--circuit", s(&c), "--out", s(&target)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(target)
        .unwrap()
        .contains("\"history\""));
}
