use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn kinetic(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic-apnn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not a record ({e}): {text}"))
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["solve", "--override", "problem.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = stderr_record(&o);
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["key"], "problem.bogus");
    assert_eq!(read_json(&dir.path().join("error.json"))["key"], "problem.bogus");
}

#[test]
fn invalid_values_name_their_key() {
    let dir = tempfile::tempdir().unwrap();
    for (ov, key) in [
        ("problem.n_v=16", "problem.n_v"),
        ("problem.eps=-1.0", "problem.eps"),
        ("training.lr=\"fast\"", "training.lr"),
        ("kernel.b1.value=5.0", "kernel.b1"),
    ] {
        let o = kinetic(dir.path(), &["verify-hypo", "--override", ov]);
        assert_eq!(o.status.code(), Some(2), "{ov}");
        assert_eq!(stderr_record(&o)["key"], key, "{ov}");
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["solve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_record(&o)["key"], "--config");
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["solve", "--seed", "minus-one"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_record(&o)["kind"], "config");
    let o = kinetic(dir.path(), &["fly"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn too_few_checkpoints_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(
        dir.path(),
        &["theorem2-study", "--override", "training.steps=100", "--override", "training.checkpoint_every=50"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_record(&o)["key"], "training.checkpoint_every");
}

#[test]
fn diverging_training_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(
        dir.path(),
        &["train", "--override", "training.steps=5", "--override", "training.diverge_at=1e-12"],
    );
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_record(&o);
    assert_eq!(rec["kind"], "numerical");
    assert_eq!(read_json(&dir.path().join("error.json"))["exit_code"], 1);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["ap-study", "--override", "studies.ap_eps=[1.0]"]);
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_record(&o);
    assert_eq!(rec["kind"], "check");
    assert_eq!(rec["key"], "smallest_eps_gap");
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["passed"], false);
}

#[test]
fn verify_hypo_certifies_the_surrogate() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["verify-hypo", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["passed"], true);
    let gap = report["report"]["entries"][0]["report"]["lambda_gap"].as_f64().unwrap();
    assert!((gap - 1.0).abs() <= 1e-10);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["seeds"]["run"], 4);
    assert_eq!(manifest["command"], "verify-hypo");
    let files = manifest["files"].as_array().unwrap();
    for name in ["config.toml", "hypo.csv", "report.json"] {
        let entry = files.iter().find(|f| f["path"] == name).unwrap_or_else(|| panic!("{name} not in manifest"));
        let digest = Sha256::digest(std::fs::read(dir.path().join(name)).unwrap());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"], hex);
    }
    let events = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    assert!(events.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
}

#[test]
fn written_config_reproduces_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(dir.path(), &["verify-hypo", "--override", "problem.v_max=9.0"]);
    assert_eq!(o.status.code(), Some(0));
    let again = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    let o = kinetic(again.path(), &["verify-hypo", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a = read_json(&dir.path().join("manifest.json"));
    let b = read_json(&again.path().join("manifest.json"));
    assert_eq!(a["config_hash"], b["config_hash"]);
}

#[test]
fn reruns_write_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["solve", "--seed", "3", "--override", "problem.t_end=0.1"];
    assert_eq!(kinetic(a.path(), &args).status.code(), Some(0));
    assert_eq!(kinetic(b.path(), &args).status.code(), Some(0));
    for name in ["trajectory.csv", "energy.csv", "config.toml"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}
