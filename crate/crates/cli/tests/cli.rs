use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulseforge"))
        .current_dir(dir)
        .env_remove("PULSEFORGE_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn beta(v: &Value) -> f64 {
    v["result"]["beta"].as_f64().unwrap()
}

#[test]
fn verify_reports_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(dir.path(), &["verify", "whh4"]));
    assert!((beta(&v) - 0.57735).abs() < 1e-5);
    assert_eq!(v["result"]["clean"], false);
    let v = json_out(&run(dir.path(), &["verify", "hord-qutrit-8"]));
    assert!((beta(&v) - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(v["result"]["clean"], true);
    assert_eq!(v["config"]["command"]["verify"]["spins"], 2);
}

#[test]
fn malformed_json_is_a_compute_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"d\": 3, \"frames\": [").unwrap();
    let o = run(dir.path(), &["verify", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json") && err.contains("line"), "{err}");

    std::fs::write(dir.path().join("nofield.json"), r#"{"d": 2, "frames": [{"word": [["V0W1", 1]]}]}"#).unwrap();
    let o = run(dir.path(), &["verify", "nofield.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weight"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify", "whh4", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["search"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["simulate", "--sequence", "whh4", "--basis", "xx"]).status.code(), Some(2));
}

#[test]
fn export_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sequences", "export", "hord-qutrit-8", "--out", "h8.json"]);
    assert!(o.status.success());
    let from_file = json_out(&run(dir.path(), &["verify", "h8.json"]));
    let built_in = json_out(&run(dir.path(), &["verify", "hord-qutrit-8"]));
    assert_eq!(beta(&from_file), beta(&built_in));
    assert_eq!(from_file["result"]["h0_coeffs"], built_in["result"]["h0_coeffs"]);
}

#[test]
fn simulate_writes_one_row_per_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let v =
        json_out(&run(dir.path(), &["simulate", "--sequence", "hord-qubit-5", "--basis", "qubit", "--samples", "100"]));
    let text = std::fs::read_to_string(dir.path().join("fid.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,signal");
    assert_eq!(lines.len() - 1, 256);
    assert_eq!(v["result"]["rows"], 256);
    // Fifteen significant digits.
    let first = lines[1].split(',').nth(1).unwrap();
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 15);
    // Resolved defaults are echoed.
    assert!(v["config"]["command"]["simulate"]["tau"].as_f64().unwrap() > 0.0);

    let s = json_out(&run(dir.path(), &["spectrum", "fid.csv"]));
    let peak = s["result"]["peak_freq"].as_f64().unwrap();
    assert!((peak - 1.0 / 3.0).abs() <= s["result"]["bin_width"].as_f64().unwrap());
}

#[test]
fn echoed_config_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "simulate",
            "--sequence",
            "hord-qutrit-8",
            "--basis",
            "dq",
            "--samples",
            "50",
            "--cycles",
            "64",
            "--seed",
            "7",
        ],
    );
    std::fs::write(dir.path().join("echo.json"), &o.stdout).unwrap();
    let first = std::fs::read(dir.path().join("fid.csv")).unwrap();
    std::fs::remove_file(dir.path().join("fid.csv")).unwrap();
    let again = run(dir.path(), &["run", "echo.json"]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(std::fs::read(dir.path().join("fid.csv")).unwrap(), first);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--sequence", "hord-qubit-5", "--samples", "300", "--cycles", "32", "--out"];
    let mut outs = Vec::new();
    for (threads, file) in [("1", "a.csv"), ("4", "b.csv")] {
        let mut full = args.to_vec();
        full.push(file);
        let o = Command::new(env!("CARGO_BIN_EXE_pulseforge"))
            .current_dir(dir.path())
            .env("PULSEFORGE_THREADS", threads)
            .args(&full)
            .output()
            .unwrap();
        assert!(o.status.success());
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["config"]["threads"].as_u64().unwrap().to_string(), threads);
        outs.push(std::fs::read(dir.path().join(file)).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn qubit_search_finds_total_weight_six() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "search",
            "--model",
            "qubit",
            "--target",
            "decouple-keep-zeeman",
            "--out",
            "result.json",
            "--dump-problem",
            "lp.json",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["total_weight"], 6);
    assert_eq!(v["result"]["report"]["clean"], true);

    // The search output doubles as a sequence file.
    let r = json_out(&run(dir.path(), &["verify", "result.json"]));
    assert!((beta(&r) - 1.0 / 3.0).abs() < 1e-9);

    // Solving the dumped program reproduces the objective.
    let s = json_out(&run(dir.path(), &["solve", "lp.json"]));
    assert_eq!(s["result"]["objective"], v["result"]["objective"]);
}

#[test]
fn toml_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), "[command.verify]\nsequence = \"cyl6\"\ntau = 0.5\n").unwrap();
    let a = json_out(&run(dir.path(), &["run", "cfg.toml"]));
    let b = json_out(&run(dir.path(), &["verify", "cyl6", "--tau", "0.5"]));
    assert_eq!(a, b);

    std::fs::write(dir.path().join("typo.toml"), "[command.verify]\nsequense = \"cyl6\"\n").unwrap();
    assert_eq!(run(dir.path(), &["run", "typo.toml"]).status.code(), Some(2));
}

#[test]
fn dictionary_and_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let d = json_out(&run(dir.path(), &["dictionary", "--model", "qubit"]));
    assert_eq!(d["result"]["raw_size"], 24);
    assert_eq!(d["result"]["classes"], 6);
    assert_eq!(d["result"]["entries"][0]["transformed_hz_coeffs"].as_array().unwrap().len(), 16);

    let o =
        run(dir.path(), &["recover", "hozd-qutrit-12", "--rotation", "(V0W2)_1(V4W1)_2(V1W1)_3", "--out", "rec.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["kept_frames"], serde_json::json!([0, 2, 4, 5, 6, 8, 10, 11]));
    assert_eq!(v["result"]["rotation"], "(V0W2)_1(V4W1)_2(V1W1)_3");
    let check = json_out(&run(dir.path(), &["verify", "rec.json"]));
    assert!((beta(&check) - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn unwritable_output_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--sequence", "whh4", "--out", "missing/dir/fid.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}
