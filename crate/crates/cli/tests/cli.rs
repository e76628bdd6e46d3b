use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genoshare"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn gen(dir: &Path, snps: usize, seed: u64) -> (String, String) {
    let (case, control) = (p(dir, "case.csv"), p(dir, "control.csv"));
    ok_json(&[
        "gen", "--n-case", "200", "--n-control", "200", "--snps", &snps.to_string(), "--n-assoc", "10",
        "--seed", &seed.to_string(), "--case-out", &case, "--control-out", &control,
    ]);
    (case, control)
}

fn sanitize(dir: &Path, case: &str, control: &str, out: &str, epsilon: &str) -> Value {
    ok_json(&[
        "sanitize", "--input", case, "--ref", control, "--epsilon", epsilon, "--seed", "9", "--output",
        &p(dir, out),
    ])
}

#[test]
fn sanitize_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (case, control) = gen(dir.path(), 120, 1);
    let a = sanitize(dir.path(), &case, &control, "a.csv", "1.0");
    let out_b = p(dir.path(), "b.csv");
    let b = ok_json(&[
        "--threads", "1", "sanitize", "--input", &case, "--ref", &control, "--epsilon", "1.0", "--seed", "9",
        "--output", &out_b,
    ]);
    assert_eq!(std::fs::read(p(dir.path(), "a.csv")).unwrap(), std::fs::read(&out_b).unwrap());
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["args"]["epsilon"], 1.0);
    assert_eq!(a["args"]["split"], 0.2);
    assert_eq!(a["result"]["budget"]["eps_x"].as_f64().unwrap(), 0.2);
}

#[test]
fn sanitize_writes_requested_side_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (case, control) = gen(dir.path(), 30, 2);
    let (report, perturbed, diag) = (p(dir.path(), "r.json"), p(dir.path(), "pert.csv"), p(dir.path(), "d.jsonl"));
    let out = p(dir.path(), "s.csv");
    let stdout = ok_json(&[
        "sanitize", "--input", &case, "--ref", &control, "--epsilon", "1.5", "--output", &out, "--report", &report,
        "--dump-perturbed", &perturbed, "--diagnostics", &diag, "--kappa", "theorem-literal",
    ]);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(saved, stdout);
    assert_eq!(stdout["result"]["noise_profile"]["kappa_variant"], "theorem-literal");
    let lines: Vec<Value> = std::fs::read_to_string(&diag)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 30);
    assert!(lines[0].get("plan").is_some());
    assert_eq!(std::fs::read_to_string(&perturbed).unwrap().lines().count(), 201);
}

#[test]
fn verify_true_findings_on_raw_data_retain_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (case, control) = gen(dir.path(), 200, 3);
    let findings = p(dir.path(), "findings.txt");
    ok_json(&["findings", "--case", &case, "--control", &control, "--omega", "0.05", "--output", &findings]);
    let v = ok_json(&[
        "verify", "--shared", &case, "--control", &control, "--reported", &findings, "--threshold", "0.5",
    ]);
    assert_eq!(v["result"]["retention_ratio"], 1.0);
    assert_eq!(v["result"]["verdict"], "reproducible");
    assert_eq!(v["args"]["zeta"], 0.7);
}

#[test]
fn shifted_findings_retain_less_after_sanitizing() {
    let dir = tempfile::tempdir().unwrap();
    let (case, control) = (p(dir.path(), "case.csv"), p(dir.path(), "control.csv"));
    ok_json(&[
        "gen", "--seed", "4", "--case-out", &case, "--control-out", &control,
    ]);
    sanitize(dir.path(), &case, &control, "shared.csv", "1.5");
    let shared = p(dir.path(), "shared.csv");
    let mut retention = Vec::new();
    for delta in ["0", "1.0"] {
        let findings = p(dir.path(), &format!("f{delta}.txt"));
        ok_json(&["findings", "--case", &case, "--control", &control, "--delta", delta, "--output", &findings]);
        let v = ok_json(&[
            "verify", "--shared", &shared, "--control", &control, "--reported", &findings, "--threshold", "0.5",
        ]);
        retention.push(v["result"]["retention_ratio"].as_f64().unwrap());
    }
    assert!(retention[1] < retention[0], "{retention:?}");
}

#[test]
fn attack_and_metrics_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (case, control) = gen(dir.path(), 300, 5);
    let raw = ok_json(&["attack", "--shared", &case, "--control", &control]);
    assert_eq!(raw["result"]["attack_power"], 1.0);
    sanitize(dir.path(), &case, &control, "shared.csv", "1.0");
    let shared = p(dir.path(), "shared.csv");
    let protected = ok_json(&["attack", "--shared", &shared, "--control", &control, "--members", &case]);
    assert!(protected["result"]["attack_power"].as_f64().unwrap() <= 0.3);
    let same = ok_json(&["metrics", "--original", &case, "--shared", &case]);
    for key in ["point_error", "sample_error", "mean_error", "variance_error"] {
        assert_eq!(same["result"][key], 0.0);
    }
    let m = ok_json(&["metrics", "--original", &case, "--shared", &shared]);
    assert!(m["result"]["point_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config: PathBuf = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "seed = 1\ntrials = 2\nepsilons = [1.0]\ndeltas = [0.0, 1.0]\n\
         [synthetic]\nn_case = 40\nn_control = 40\nsnps = 60\nn_assoc = 5\nmaf_shift = 0.3\n",
    )
    .unwrap();
    let v = ok_json(&["sweep", "--config", config.to_str().unwrap(), "--epsilons", "0.5,1.5", "--trials", "3"]);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(v["result"]["config"]["trials"], 3);
    assert_eq!(rows[0]["retention"]["values"].as_array().unwrap().len(), 3);
}

#[test]
fn failures_are_structured_json_on_stderr() {
    let out = run(&["metrics", "--original", "/nonexistent/a.csv", "--shared", "/nonexistent/b.csv"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");

    let out = run(&["verify", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn bad_cells_and_overwrites_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = p(dir.path(), "bad.csv");
    std::fs::write(&bad, "a,b\n0,1\n2,7\n").unwrap();
    let out = run(&["metrics", "--original", &bad, "--shared", &bad]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "genotype");

    let (case, control) = gen(dir.path(), 20, 6);
    let before = std::fs::read(&case).unwrap();
    let out = run(&["sanitize", "--input", &case, "--ref", &control, "--epsilon", "1", "--output", &case]);
    assert!(!out.status.success());
    assert_eq!(std::fs::read(&case).unwrap(), before);
}
