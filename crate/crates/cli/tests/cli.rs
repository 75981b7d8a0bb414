use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn teamform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamform"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn synth(dir: &Path) -> String {
    let path = dir.join("forum.jsonl");
    let p = path.to_str().unwrap().to_owned();
    let out = teamform(&[
        "synth",
        "--students",
        "40",
        "--threads",
        "30",
        "--posts",
        "60",
        "--comments",
        "50",
        "--seed",
        "4",
        "--out",
        &p,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&teamform(&["--help"])), 0);
    assert_eq!(code(&teamform(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&teamform(&["no-such-command"])), 1);
    assert_eq!(code(&teamform(&["ingest"])), 1);
    assert_eq!(
        code(&teamform(&[
            "ingest", "--input", "x", "--policy", "sideways"
        ])),
        1
    );
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = teamform(&["metrics", "--input", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn synth_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = synth(a.path());
    let pb = synth(b.path());
    let text = fs::read_to_string(&pa).unwrap();
    assert_eq!(text, fs::read_to_string(pb).unwrap());
    assert_eq!(text.lines().count(), 60 + 50);
}

#[test]
fn metrics_csv_and_teams_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    let out = teamform(&["metrics", "--input", &input]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("student,pagerank,"));
    assert_eq!(csv.lines().count(), 41);

    let out = teamform(&["teams", "--input", &input, "--seed", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let again = teamform(&["teams", "--input", &input, "--seed", "2"]);
    assert_eq!(out.stdout, again.stdout);
    let teams: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(teams["teams"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn pipeline_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    let run = dir.path().join("run");
    let out = teamform(&[
        "pipeline",
        "--input",
        &input,
        "--out-dir",
        run.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["seed"], 9);
    for name in manifest["artifacts"].as_object().unwrap().keys() {
        assert!(run.join(name).exists(), "{name}");
    }
    assert!(run.join("timings.json").exists());
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = teamform(&[
        "pipeline",
        "--seed",
        "5",
        "--no-diffusion",
        "--print-config",
    ]);
    assert_eq!(code(&out), 0);
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["seed"], 5);
    assert!(cfg["diffusion"].is_null());
    let path = dir.path().join("run.json");
    fs::write(&path, &out.stdout).unwrap();
    let again = teamform(&[
        "pipeline",
        "--config",
        path.to_str().unwrap(),
        "--print-config",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn failed_stage_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let missing = dir.path().join("missing.jsonl");
    let out = teamform(&[
        "pipeline",
        "--input",
        missing.to_str().unwrap(),
        "--out-dir",
        run.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "incomplete");
    assert_eq!(manifest["failed_stage"], "ingest");
}
