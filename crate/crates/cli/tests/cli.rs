//! End-to-end runs of the `apdecay` binary: outputs, exit codes and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use apdecay::groups::{dmat_sp2, ChamberSp2};
use serde_json::{json, Value};
use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apdecay")).current_dir(dir).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_in(&std::env::temp_dir(), args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json_out(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn sl3_certificate_at_origin_is_120() {
    let v = json_out(&run(&["certify", "sl3", "--s", "0", "--t", "0", "--norm", "1", "--seed", "11"]));
    assert_eq!(v["result"]["final_bound"], json!(120.0));
    assert_eq!(v["seed"], json!(11));
    assert_eq!(v["result"]["seed"], json!(11));
    assert_eq!(v["schema_version"], json!(1));
    for key in ["group", "target", "norm_bound", "branch", "steps", "constants", "artifact_version"] {
        assert!(v["result"].get(key).is_some(), "{key}");
    }
}

#[test]
fn sp2_certificate_at_origin_is_the_ledger_c1() {
    let cert = json_out(&run(&["certify", "sp2", "--beta", "0", "--gamma", "0", "--norm", "1", "--c-hat", "1"]));
    let ledger = json_out(&run(&["constants", "--c-hat", "1"]));
    let c1 = ledger["result"]["ledger"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == "C1_sp2")
        .unwrap()["value"]
        .clone();
    assert_eq!(cert["result"]["final_bound"], c1);
    assert_eq!(ledger["result"]["verification"]["violation_count"], json!(0));
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["certify", "sp2", "--beta", "1", "--gamma", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--norm"));
    assert_eq!(code(&run(&["verify", "bogus"])), 2);
    assert_eq!(code(&run(&["certify", "sp2", "--beta", "2", "--gamma", "3", "--norm", "1", "--c-hat", "1"])), 2);
    assert_eq!(code(&run(&["witness", "hyperbola", "--beta", "5", "--gamma", "0.01"])), 2);
    assert_eq!(code(&run(&["verify", "limit", "--grid", "{\"t_mni\": 5}"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn kak_reads_matrix_files() {
    let dir = TempDir::new().unwrap();
    let identity: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
    let id_path = dir.path().join("identity.json");
    std::fs::write(&id_path, serde_json::to_string(&identity).unwrap()).unwrap();
    let v = json_out(&run(&["kak", "--matrix-file", id_path.to_str().unwrap()]));
    assert_eq!(v["result"]["chamber"], json!({ "beta": 0.0, "gamma": 0.0 }));

    let d = dmat_sp2(ChamberSp2::new(1.0, 0.5).unwrap());
    let d_path = dir.path().join("d.json");
    std::fs::write(&d_path, serde_json::to_string(&d).unwrap()).unwrap();
    let v = json_out(&run(&["kak", "--matrix-file", d_path.to_str().unwrap()]));
    let c = &v["result"]["chamber"];
    assert!((c["beta"].as_f64().unwrap() - 1.0).abs() < 1e-12 && (c["gamma"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    // I4 with one entry perturbed by 0.1 is not symplectic
    let text: Vec<String> = identity.iter().enumerate().map(|(i, x)| (x + if i == 1 { 0.1 } else { 0.0 }).to_string()).collect();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, text.join(" ")).unwrap();
    let o = run(&["kak", "--matrix-file", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("symplectic"));

    let v = json_out(&run(&["kak", "--entries", "1,0,0,0,1,0,0,0,1"]));
    assert_eq!(v["result"]["chamber"], json!({ "s": 0.0, "t": 0.0 }));
}

#[test]
fn verify_campaigns_exit_0() {
    let v = json_out(&run(&["verify", "lpestimates", "--no-timestamp"]));
    assert_eq!(v["result"]["report"]["violation_count"], json!(0));
    assert!(v["result"]["report"].get("wall_time_ms").is_none());
    let v = json_out(&run(&["verify", "all", "--quick"]));
    assert_eq!(v["result"]["report"]["violation_count"], json!(0));
    assert!(v["generated_at_unix"].is_u64());
}

#[test]
fn identical_commands_give_identical_bytes() {
    let args = ["verify", "kakeqs", "--quick", "--seed", "5", "--no-timestamp"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["verify", "kakeqs", "--quick", "--seed", "6", "--no-timestamp"]);
    assert_ne!(a.stdout, other.stdout);
    let synth = ["multiplier", "synth", "--pair", "u2u1", "--degree", "6", "--seed", "3", "--no-timestamp"];
    assert_eq!(run(&synth).stdout, run(&synth).stdout);
}

#[test]
fn violations_exit_1_with_a_reproducer() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    let o = run_in(dir.path(), &["multiplier", "synth", "--pair", "u2u1", "--degree", "8", "--output", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let ok = run_in(dir.path(), &["multiplier", "holder", "--multiplier", "m.json", "--theta1", "0", "--theta2", "2", "--c-hat", "1"]);
    assert_eq!(json_out(&ok)["result"]["holds"], json!(true));

    let repro = dir.path().join("repro.json");
    let args = [
        "multiplier", "holder", "--multiplier", "m.json", "--theta1", "0", "--theta2", "2", "--c-hat", "1e-6",
        "--reproducer", repro.to_str().unwrap(),
    ];
    let o = run_in(dir.path(), &args);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&repro).unwrap()).unwrap();
    assert_eq!(r["reproducer"]["command"], json!("multiplier holder"));
    assert!(r["reproducer"]["detail"]["multiplier"].is_object());

    // a campaign with a deliberately wrong constant; the reproducer lands next to --output
    let grid = r#"{"c_hat": 1e-6, "pq_max": 10, "theta_points": 16, "random_multipliers": 1, "random_degree": 5, "r_points": 16}"#;
    let out = dir.path().join("hoelder.json");
    let o = run_in(dir.path(), &["verify", "hoelder", "--grid", grid, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["result"]["report"]["violation_count"].as_u64().unwrap() > 0);
    assert!(dir.path().join("hoelder.json.reproducer.json").exists());
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 7, "format": "csv", "no_timestamp": true}"#).unwrap();
    let o = run(&["witness", "circle", "--beta", "3", "--gamma", "1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("path,value\n"));
    assert!(text.contains("\nseed,7\n") && !text.contains("generated_at_unix"));
    let o = run(&["witness", "circle", "--beta", "3", "--gamma", "1", "--config", cfg.to_str().unwrap(), "--seed", "9", "--format", "json"]);
    assert_eq!(json_out(&o)["seed"], json!(9));

    std::fs::write(&cfg, r#"{"sed": 7}"#).unwrap();
    assert_eq!(code(&run(&["constants", "--c-hat", "1", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn csv_campaign_rows() {
    let o = run(&["verify", "limit", "--quick", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lemma_id,kind,margin,checks,violation_count,location"));
    assert!(lines.next().unwrap().starts_with("limit,worst,"));
}

#[test]
fn spherical_and_multiplier_evaluation() {
    let v = json_out(&run(&["spherical", "--pair", "u2u1", "--p", "0", "--q", "0", "--re", "0.3", "--im", "-0.2"]));
    assert_eq!(v["result"]["value"], json!([1.0, 0.0]));
    let v = json_out(&run(&["spherical", "--pair", "so3so2", "--n", "2", "--re", "0.5"]));
    assert!((v["result"]["value"][0].as_f64().unwrap() - (-0.125)).abs() < 1e-15);
    assert_eq!(code(&run(&["spherical", "--pair", "so3so2", "--n", "2", "--re", "1.5"])), 2);

    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"pair_id": "SO3_SO2", "coefficients": [{"n": 0, "re": 0.5, "im": 0}, {"n": 1, "re": 0.5, "im": 0}]}"#).unwrap();
    let v = json_out(&run(&["multiplier", "eval", "--multiplier", m.to_str().unwrap(), "--re", "1"]));
    assert_eq!(v["result"]["value"], json!([1.0, 0.0]));
    let v = json_out(&run(&["multiplier", "holder", "--multiplier", m.to_str().unwrap(), "--r1", "-0.5", "--r2", "0.5"]));
    assert_eq!(v["result"]["holds"], json!(true));
}

#[test]
fn witnesses_from_the_command_line() {
    let v = json_out(&run(&["witness", "sl3", "--r", "3", "--theta", "1.0471975511965976"]));
    assert_eq!(v["result"]["kind"], json!("sl3"));
    assert!(v["result"]["membership_residual"].as_f64().unwrap() <= 1e-7);
    let v = json_out(&run(&["witness", "hyperbola", "--beta", "5", "--gamma", "2"]));
    assert_eq!(v["result"]["kind"], json!("hyperbola"));
}
