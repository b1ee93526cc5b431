//! End-to-end tests of the `interq` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn interq() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_interq"));
    // Isolate from whatever seed the ambient environment carries.
    cmd.env_remove("INTERQ_SEED");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn interq");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        "[training]\nepochs = 2\n\n[synthesis]\nn_depressed = 6\nn_normal = 12\nsignal_strength = 5.0\n",
    )
    .unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn rerunning_commands_rewrites_artifacts_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = write_small_config(root);
    let features = root.join("features");
    let checkpoint = root.join("model.ckpt");
    let metrics = root.join("metrics.json");
    let report = root.join("attention.json");

    let run_all = |force: bool| {
        let mut synth = interq();
        synth
            .args(["synthesize", "--out"])
            .arg(&features)
            .arg("--config")
            .arg(&config)
            .args(["--seed", "3"]);
        if force {
            synth.arg("--force");
        }
        run_ok(&mut synth);
        run_ok(
            interq()
                .args(["train", "--features-dir"])
                .arg(&features)
                .arg("--out")
                .arg(&checkpoint)
                .arg("--config")
                .arg(&config)
                .args(["--seed", "3"]),
        );
        run_ok(
            interq()
                .args(["evaluate", "--checkpoint"])
                .arg(&checkpoint)
                .arg("--features-dir")
                .arg(&features)
                .arg("--out")
                .arg(&metrics)
                .args(["--seed", "3"]),
        );
        run_ok(
            interq()
                .args(["report-attention", "--checkpoint"])
                .arg(&checkpoint)
                .arg("--features-dir")
                .arg(&features)
                .arg("--out")
                .arg(&report)
                .args(["--seed", "3"]),
        );
    };

    run_all(false);
    let feature_file = {
        let mut bins: Vec<PathBuf> = std::fs::read_dir(&features)
            .unwrap()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("feat"))
            .collect();
        bins.sort();
        assert_eq!(bins.len(), 18, "expected 18 feature files");
        bins[0].clone()
    };
    let tracked = [
        feature_file,
        features.join("manifest.json"),
        checkpoint.clone(),
        root.join("model.manifest.json"),
        metrics.clone(),
        root.join("metrics.manifest.json"),
        report.clone(),
        root.join("attention.manifest.json"),
    ];
    let before: Vec<Vec<u8>> = tracked.iter().map(|p| read(p)).collect();

    run_all(true);
    for (path, old) in tracked.iter().zip(&before) {
        assert_eq!(
            &read(path),
            old,
            "{} changed across identical reruns",
            path.display()
        );
    }
}

#[test]
fn pipeline_smoke_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[training]\nepochs = 5\n\n[synthesis]\nn_depressed = 10\nn_normal = 10\nsignal_strength = 5.0\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    run_ok(
        interq()
            .args(["pipeline", "--out"])
            .arg(&out)
            .arg("--config")
            .arg(&config)
            .args(["--seed", "1"]),
    );
    for artifact in [
        "features/manifest.json",
        "model.ckpt",
        "model.manifest.json",
        "metrics.json",
        "attention.json",
        "plots/self_audio.svg",
    ] {
        assert!(out.join(artifact).is_file(), "missing {artifact}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&read(&out.join("metrics.json"))).unwrap();
    let accuracy = metrics["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&accuracy), "accuracy {accuracy}");
    assert!(metrics["confusion"].is_array());
}

#[test]
fn transcripts_flow_through_structure_and_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let tx = dir.path().join("tx");
    std::fs::create_dir(&tx).unwrap();
    std::fs::write(
        tx.join("p001.jsonl"),
        concat!(
            "{\"speaker\": \"interviewer\", \"start\": 0.0, \"end\": 2.0, ",
            "\"text\": \"where are you from originally\"}\n",
            "{\"speaker\": \"participant\", \"start\": 2.5, \"end\": 6.0, ",
            "\"text\": \"I grew up near the coast and moved here for work.\"}\n",
        ),
    )
    .unwrap();
    std::fs::write(
        dir.path().join("labels.csv"),
        "participant_id,label\np001,depression\n",
    )
    .unwrap();
    let structured = dir.path().join("structured");
    let feats = dir.path().join("feats");
    run_ok(
        interq()
            .args(["structure", "--transcripts"])
            .arg(&tx)
            .arg("--out")
            .arg(&structured),
    );
    run_ok(
        interq()
            .args(["extract-features", "--structured"])
            .arg(&structured)
            .arg("--out")
            .arg(&feats)
            .arg("--labels")
            .arg(dir.path().join("labels.csv"))
            .args(["--synthetic-audio", "--seed", "5"]),
    );
    assert!(feats.join("p001.feat").is_file() || count_feature_files(&feats) == 1);
    assert!(feats.join("manifest.json").is_file());
}

fn count_feature_files(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().and_then(|x| x.to_str()) == Some("feat"))
        .count()
}

#[test]
fn unknown_questions_fail_without_allow_unseen() {
    let dir = tempfile::tempdir().unwrap();
    let tx = dir.path().join("p.jsonl");
    std::fs::write(
        &tx,
        concat!(
            "{\"speaker\": \"interviewer\", \"start\": 0.0, \"end\": 2.0, ",
            "\"text\": \"how do you feel about your current sleeping habits\"}\n",
            "{\"speaker\": \"participant\", \"start\": 2.5, \"end\": 6.0, ",
            "\"text\": \"Not great, I wake up several times a night.\"}\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("structured");
    let output = interq()
        .args(["structure", "--transcripts"])
        .arg(&tx)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("sleeping habits"), "stderr: {stderr}");

    run_ok(
        interq()
            .args(["structure", "--transcripts"])
            .arg(&tx)
            .arg("--out")
            .arg(&out)
            .args(["--allow-unseen", "--force"]),
    );
}

#[test]
fn exit_codes_distinguish_usage_data_and_io_errors() {
    // Missing required --features-dir: clap usage error.
    let usage = interq()
        .args(["evaluate", "--checkpoint", "x.ckpt"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));

    // Corrupt checkpoint: data error naming the file.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"garbage").unwrap();
    let features = dir.path().join("features");
    run_ok(
        interq()
            .args(["synthesize", "--n-depressed", "1", "--n-normal", "2", "--out"])
            .arg(&features),
    );
    let corrupt = interq()
        .args(["evaluate", "--checkpoint"])
        .arg(&bad)
        .arg("--features-dir")
        .arg(&features)
        .arg("--out")
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(corrupt.status.code(), Some(3));
    assert!(
        String::from_utf8_lossy(&corrupt.stderr).contains("bad.ckpt"),
        "stderr should name the corrupt file"
    );

    // Nonexistent checkpoint path: I/O error.
    let missing = interq()
        .args(["evaluate", "--checkpoint"])
        .arg(dir.path().join("absent.ckpt"))
        .arg("--features-dir")
        .arg(&features)
        .arg("--out")
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn seed_env_var_fills_in_when_flags_are_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("features");
    let mut cmd = interq();
    cmd.args(["synthesize", "--n-depressed", "1", "--n-normal", "1", "--out"])
        .arg(&out)
        .env("INTERQ_SEED", "9");
    run_ok(&mut cmd);
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(9));

    // An explicit flag still wins over the environment.
    let out2 = dir.path().join("features2");
    let mut cmd = interq();
    cmd.args(["synthesize", "--n-depressed", "1", "--n-normal", "1", "--out"])
        .arg(&out2)
        .args(["--seed", "4"])
        .env("INTERQ_SEED", "9");
    run_ok(&mut cmd);
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&out2.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(4));
}

#[test]
fn non_empty_output_dir_requires_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("features");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("keep.txt"), "x").unwrap();
    let refused = interq()
        .args(["synthesize", "--n-depressed", "1", "--n-normal", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force"));
}
