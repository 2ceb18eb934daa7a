use std::path::Path;
use std::process::{Command, Output};

fn twosys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twosys")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("twosys-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_a_successful_episode() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&twosys(&["run", "--family", "math_reasoning", "--seed", "3"]))).unwrap();
    assert_eq!(v["success"], true);
    assert_eq!(v["label"], "SLOW");
}

#[test]
fn run_rejects_unknown_family() {
    let o = twosys(&["run", "--family", "juggling"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("juggling"));
}

#[test]
fn bench_is_deterministic_csv() {
    let args = ["bench", "--families", "rotate,word_correction", "--episodes", "4", "--seed", "7"];
    let a = stdout(&twosys(&args));
    assert_eq!(a, stdout(&twosys(&args)));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "family,episodes,successes,rate_percent");
    assert_eq!(lines[1], "rotate,4,4,100.0");
    assert_eq!(lines[2], "word_correction,4,4,100.0");
}

#[test]
fn bench_fault_injection_fails_and_reports() {
    let o = twosys(&["bench", "--families", "stack_order", "--episodes", "3", "--fault", "reversed-steps", "--failures"]);
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1), Some("stack_order,3,0,0.0"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step"));
}

#[test]
fn gen_data_then_align() {
    let dir = tmp("gen");
    let out = dir.join("corpus");
    let m: serde_json::Value =
        serde_json::from_str(&stdout(&twosys(&["gen-data", "--out", out.to_str().unwrap(), "--count", "12", "--seed", "5"]))).unwrap();
    assert_eq!(m["count"], 12);
    let traj = out.join("trajectories.jsonl");
    assert!(Path::new(&traj).exists());
    assert!(out.join("manifest.json").exists());

    let ann = dir.join("ann.jsonl");
    let o = twosys(&["align", "--input", traj.to_str().unwrap(), "--out", ann.to_str().unwrap()]);
    stdout(&o);
    let stats: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(stats["trajectories"], 12);
    assert_eq!(stats["gaps"], 0);
    assert_eq!(std::fs::read_to_string(&ann).unwrap().lines().count() as u64, stats["paired"].as_u64().unwrap());

    let o = twosys(&["align", "--input", traj.to_str().unwrap(), "--alpha", "0.999"]);
    let stats: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert!(stats["gaps"].as_u64().unwrap() >= 1);
}

#[test]
fn bank_augment_and_classify_with_config() {
    let dir = tmp("bank");
    let bank = dir.join("bank.jsonl");
    let o = twosys(&["bank", "augment", "--iterations", "1", "--branching", "2", "--out", bank.to_str().unwrap()]);
    stdout(&o);
    let lines = std::fs::read_to_string(&bank).unwrap().lines().count();
    assert!(lines > 27, "{lines}");

    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, format!("[bank]\npath = {:?}\nk = 3\n", bank.to_str().unwrap())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&twosys(&[
        "--config",
        cfg.to_str().unwrap(),
        "bank",
        "classify",
        "--text",
        "sort the blocks into boxes by colour",
    ])))
    .unwrap();
    assert_eq!(v["label"], "SLOW");
    assert_eq!(v["neighbors"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_config_is_reported() {
    let dir = tmp("cfg");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, "[aligner]\nalpha = 2.0\n").unwrap();
    let o = twosys(&["--config", cfg.to_str().unwrap(), "bench", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aligner.alpha"));
}
