use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PARAMS: [&str; 10] = [
    "--params.gamma",
    "1",
    "--params.mu",
    "1",
    "--params.omega",
    "1",
    "--params.sigma",
    "2",
    "--params.dim",
    "2",
];

fn bnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnls"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn with_params<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(PARAMS.iter()).chain(tail).copied().collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_keys_are_listed_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = bnls(&["groundstate", "--output.dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["params.gamma", "params.sigma", "grid.points", "grid.half_width"] {
        assert!(err.contains(key), "{err}");
    }
    assert!(!out_dir.join("manifest.json").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[params]\ngamma = 1.0\nbeta = 2.0\n").unwrap();
    let out = bnls(&["groundstate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.beta"));
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bnls(&[
        "instability",
        "--instability.preset",
        "no-such-preset",
        "--output.dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn groundstate_manifest_and_identities_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gs.toml");
    std::fs::write(&cfg, "solver.max_iters = 4000\n[grid]\npoints = 32\nhalf_width = 16.0\n").unwrap();
    let run = dir.path().join("gs");
    let args = with_params(
        &["groundstate", "-c", cfg.to_str().unwrap()],
        &["--grid.points", "128", "--run.threads", "1", "--output.dir", run.to_str().unwrap()],
    );
    let out = bnls(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["command"], "groundstate");
    // the flag wins over the file, and defaults are recorded
    assert_eq!(manifest["config"]["grid.points"], 128);
    assert!(manifest["config"].get("solver.max_iters").is_some());
    assert_eq!(manifest["inputs"][0]["path"], cfg.to_str().unwrap());
    for entry in manifest["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(run.join(entry["path"].as_str().unwrap())).unwrap();
        let digest = format!("{:x}", <sha2::Sha256 as sha2::Digest>::digest(&bytes));
        assert_eq!(entry["sha256"], digest.as_str());
    }
    let gs = json(&run.join("groundstate.json"));
    assert_eq!(gs["certificate"]["accepted"], true);

    let again = dir.path().join("gs2");
    let mut args2 = args.clone();
    let last = args2.len() - 1;
    args2[last] = again.to_str().unwrap();
    assert_eq!(bnls(&args2).status.code(), Some(0));
    assert_eq!(
        std::fs::read(run.join("profile.bin")).unwrap(),
        std::fs::read(again.join("profile.bin")).unwrap()
    );

    let id = dir.path().join("id");
    let out = bnls(&[
        "identities",
        "--identities.snapshot",
        run.join("profile.bin").to_str().unwrap(),
        "--output.dir",
        id.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&id.join("identities.json"));
    for d in report["identity_defects"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() < 1e-7);
    }
}

#[test]
fn coarse_groundstate_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("gs");
    let args = with_params(
        &["groundstate"],
        &["--grid.points", "64", "--grid.half_width", "16", "--output.dir", run.to_str().unwrap()],
    );
    assert_eq!(bnls(&args).status.code(), Some(4));
    assert_eq!(json(&run.join("manifest.json"))["exit_code"], 4);
}

#[test]
fn short_evolution_writes_series_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("ev");
    let args = with_params(
        &["evolve"],
        &[
            "--grid.points",
            "32",
            "--grid.half_width",
            "8",
            "--evolve.dt",
            "1e-3",
            "--evolve.t_end",
            "0.05",
            "--evolve.sample_every",
            "10",
            "--evolve.snapshot_every",
            "2",
            "--output.dir",
            run.to_str().unwrap(),
        ],
    );
    let out = bnls(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let series = std::fs::read_to_string(run.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 6);
    assert!(run.join("final.bin").exists());
    assert!(run.join("snapshot_000000.bin").exists());
    assert_eq!(json(&run.join("outcome.json"))["outcome"]["verdict"], "completed");
}

#[test]
fn proposition_sampling_passes() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("prop");
    let args = with_params(
        &["proposition"],
        &[
            "--grid.points",
            "128",
            "--grid.half_width",
            "16",
            "--proposition.samples",
            "40",
            "--output.dir",
            run.to_str().unwrap(),
        ],
    );
    let out = bnls(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("proposition.json").exists());
}
