use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pauli-lens"));
    c.env_remove("PAULI_LENS_DENSE_LIMIT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).arg("--quiet").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const CIRCUIT: &str = "qubits 2 1\nanc |0>\nlayer L: g(H)@0 g(T)@1\nlayer M: CZ@0,1,2\nlayer L: g(H)@2 g(H)@1\n";

fn write_circuit(dir: &Path) -> String {
    let p = dir.join("c.txt");
    std::fs::write(&p, CIRCUIT).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn step1_plan_spec() {
    let out = run(&["boost", "step1", "--d", "3", "--n", "10", "--c", "2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let spec = &v["plan"]["final_spec"];
    assert_eq!(spec["depth"], 8);
    assert_eq!(spec["inputs"], "100");
    assert_eq!(spec["ancillae"], "10000");
}

#[test]
fn parity_degree_at_a_third() {
    let out = run(&["degree", "--named", "parity", "--n", "3", "--eps", "0.3333"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["query"]["degree"], 3);
}

#[test]
fn wide_named_functions_use_weights() {
    let out = run(&["degree", "--named", "parity", "--n", "60", "--eps", "0.1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["query"]["degree"], 60);
    assert_eq!(v["query"]["route"], "symmetric");
    assert_eq!(v["query"]["witness"]["by_weight"].as_array().unwrap().len(), 61);
    assert_eq!(code(&run(&["hardness", "worst", "--named", "parity", "--n", "30", "--depth", "2"])), 0);
    assert_eq!(code(&run(&["hardness", "postproc", "--named", "mod3", "--n", "40", "--depth", "2"])), 0);
    // past the symmetric cap, and anything needing a truth table, is an input error
    assert_eq!(code(&run(&["degree", "--named", "parity", "--n", "65", "--eps", "0.1"])), 2);
    assert_eq!(code(&run(&["hardness", "average", "--named", "parity", "--n", "30", "--k", "2"])), 2);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cz.json");
    let cert_s = cert.to_str().unwrap();
    assert_eq!(code(&run(&["approx", "cz", "--n", "8", "--r", "4", "--out", cert_s])), 0);
    assert!(dir.path().join("cz.csv").exists());
    assert_eq!(code(&run(&["verify", cert_s])), 0);

    // claim a smaller error than the construction achieves
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let eps = v["certificate"]["epsilon"].as_f64().unwrap();
    v["certificate"]["epsilon"] = (eps / 10.0).into();
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, v.to_string()).unwrap();
    let out = run(&["verify", tampered.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["passed"], false);

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    assert_eq!(code(&run(&["verify", junk.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["verify", dir.path().join("missing.json").to_str().unwrap()])), 2);
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(code(&run(&["degree", "--named", "nope", "--n", "3", "--eps", "0.1"])), 2);
    assert_eq!(code(&run(&["degree", "--named", "parity", "--n", "3", "--eps", "-1"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["approx", "cz", "--n", "8"])), 2);
    // a large CZ certificate is fine, but dense verification of it is refused
    assert_eq!(code(&run(&["approx", "cz", "--n", "40", "--r", "8"])), 0);
    assert_eq!(code(&run(&["approx", "cz", "--n", "40", "--r", "8", "--verify"])), 2);
}

#[test]
fn certificates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write_circuit(dir.path());
    for (name, args) in [
        ("circuit", vec!["approx", "circuit", "--circuit", &circuit, "--r", "2"]),
        ("choi", vec!["approx", "choi", "--circuit", &circuit, "--k", "1"]),
        ("state", vec!["approx", "state", "--n", "5"]),
    ] {
        let path = dir.path().join(format!("{name}.json"));
        let mut a = args.clone();
        a.extend(["--out", path.to_str().unwrap()]);
        assert_eq!(code(&run(&a)), 0, "{name}");
        let text = std::fs::read_to_string(&path).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let doc: Value = serde_json::from_value(v["certificate"].clone()).unwrap();
        assert_eq!(doc, v["certificate"]);
        let out = run(&["verify", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn circuit_json_mirror_expands_identically() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write_circuit(dir.path());
    let cert = run(&["approx", "circuit", "--circuit", &circuit, "--r", "2"]);
    let mirror = dir.path().join("c.json");
    std::fs::write(&mirror, json(&cert)["certificate"]["recipe"]["circuit"].to_string()).unwrap();
    let a = json(&run(&["expand", &circuit]));
    let b = json(&run(&["expand", mirror.to_str().unwrap()]));
    assert_eq!(a["operator"], b["operator"]);
    assert_eq!(a["degree"], 3);
}

#[test]
fn seeded_sweeps_are_deterministic() {
    let args = ["approx", "circuit", "--random", "5", "--n", "3", "--ancillae", "1", "--depth", "2"];
    let go = |seed: &str, workers: &str| {
        let mut a = args.to_vec();
        a.extend(["--seed", seed, "--workers", workers]);
        json(&run(&a))
    };
    let first = go("11", "2");
    assert_eq!(first["seed"], 11);
    assert_eq!(first["all_passed"], true);
    assert_eq!(first, go("11", "2"));
    assert_eq!(first["rows"], go("11", "1")["rows"]);
    assert_ne!(first["rows"], go("12", "2")["rows"]);
}

#[test]
fn dense_limit_from_environment() {
    let out = bin()
        .args(["approx", "state", "--n", "5", "--verify", "--quiet"])
        .env("PAULI_LENS_DENSE_LIMIT", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dense limit"));
}

#[test]
fn composed_gadgets_match_prediction() {
    let out = run(&["boost", "compose", "--top-n", "2", "--bottom-n", "2", "--delta-t", "0.9", "--delta-b", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let predicted = (1.0 + 0.5f64.powi(2) * 0.9) / 2.0;
    assert!((v["measured_worst_success"].as_f64().unwrap() - predicted).abs() < 1e-9);
}

#[test]
fn synthesis_of_basis_state_has_no_bound() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("zero.json");
    std::fs::write(&state, r#"{"n": 3, "amplitudes": [[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let out = run(&["hardness", "synthesis", "--state", state.to_str().unwrap(), "--depth", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["lower_bound"] == 0));
    assert_eq!(v["target"]["n"], 3);
}
