//! End-to-end checks of the `phasefuse` binary: every subcommand runs, exit
//! codes follow the 0/1/2 contract, and deterministic runs are
//! byte-identical.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn phasefuse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasefuse"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = phasefuse().args(args).output().expect("spawn phasefuse");
    assert!(
        out.status.success(),
        "phasefuse {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_controlled_spec(dir: &Path, d: usize, n_train: usize) -> PathBuf {
    let path = dir.join("controlled.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"n_train_per_class": {n_train}, "n_dev_per_class": 12, "n_eval_per_class": 12,
                "t": 400, "d": {d}, "phase_mode": "structured",
                "magnitude_mode": "shared_distribution", "seed": 77}}"#
        ),
    )
    .unwrap();
    path
}

#[test]
fn synth_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"n_bonafide": 2, "n_spoof": 2, "spoof_mode": "magnitude_perturbed",
            "duration_s": 0.5, "seed": 7}"#,
    )
    .unwrap();
    let out1 = dir.path().join("c1");
    let out2 = dir.path().join("c2");
    run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", out1.to_str().unwrap()]);
    run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert!(out1.join("manifest.json").exists());
    for name in ["SYN_B_0000.wav", "SYN_B_0001.wav", "SYN_S_0002.wav", "SYN_S_0003.wav"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn extract_writes_feature_caches() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"n_bonafide": 1, "n_spoof": 1, "spoof_mode": "phase_randomized",
            "duration_s": 0.5, "seed": 3}"#,
    )
    .unwrap();
    let corpus = dir.path().join("corpus");
    run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", corpus.to_str().unwrap()]);
    let cache = dir.path().join("cache");
    run_ok(&[
        "extract",
        "--feature",
        "lfcc",
        "--with-phase",
        "--manifest",
        corpus.join("manifest.json").to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
    ]);
    assert!(cache.join("SYN_B_0000.lfcc.mag.pffc").exists());
    assert!(cache.join("SYN_B_0000.lfcc.phase.pffc").exists());
    assert!(cache.join("SYN_S_0001.lfcc.mag.pffc").exists());
}

#[test]
fn train_eval_score_pipeline_on_controlled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_controlled_spec(dir.path(), 8, 16);
    let ckpt = dir.path().join("model.pfck");
    run_ok(&[
        "train",
        "--framework",
        "c",
        "--controlled",
        spec.to_str().unwrap(),
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--seed",
        "5",
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    assert!(ckpt.exists());

    let scores = dir.path().join("scores.txt");
    run_ok(&[
        "eval",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--controlled",
        spec.to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&scores).unwrap();
    assert_eq!(text.lines().count(), 24); // 12 bona fide + 12 spoof

    let out = run_ok(&["score", "--scores", scores.to_str().unwrap(), "--breakdown"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("EER"), "{stdout}");
    assert!(stdout.contains("min t-DCF"), "{stdout}");
    assert!(stdout.contains("CTRL"), "{stdout}");
}

/// Spec invariant: any subcommand with --deterministic --seed N run twice
/// produces byte-identical outputs.
#[test]
fn deterministic_training_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_controlled_spec(dir.path(), 8, 12);
    let mut bytes = Vec::new();
    for run in 0..2 {
        let ckpt = dir.path().join(format!("m{run}.pfck"));
        let scores = dir.path().join(format!("s{run}.txt"));
        run_ok(&[
            "train",
            "--framework",
            "b",
            "--controlled",
            spec.to_str().unwrap(),
            "--epochs",
            "2",
            "--batch-size",
            "8",
            "--seed",
            "7",
            "--deterministic",
            "--out",
            ckpt.to_str().unwrap(),
        ]);
        run_ok(&[
            "eval",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--controlled",
            spec.to_str().unwrap(),
            "--deterministic",
            "--out",
            scores.to_str().unwrap(),
        ]);
        bytes.push((std::fs::read(&ckpt).unwrap(), std::fs::read(&scores).unwrap()));
    }
    assert_eq!(bytes[0].0, bytes[1].0, "checkpoints differ");
    assert_eq!(bytes[0].1, bytes[1].1, "score files differ");
}

#[test]
fn eval_config_mismatch_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_controlled_spec(dir.path(), 8, 12);
    let ckpt = dir.path().join("model.pfck");
    run_ok(&[
        "train",
        "--framework",
        "a",
        "--controlled",
        spec.to_str().unwrap(),
        "--epochs",
        "1",
        "--batch-size",
        "8",
        "--seed",
        "1",
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    // checkpoint trained on the controlled corpus, evaluated without it
    let out = phasefuse()
        .args([
            "eval",
            "--ckpt",
            ckpt.to_str().unwrap(),
            "--manifest",
            "/nonexistent/manifest.json",
            "--out",
            dir.path().join("s.txt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_flag_fails_with_usage_error() {
    let out = phasefuse().args(["synth", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn matrix_reports_avg_best_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_controlled_spec(dir.path(), 8, 12);
    let out_dir = dir.path().join("report");
    let out = run_ok(&[
        "matrix",
        "--frameworks",
        "a",
        "--seeds",
        "1,2",
        "--controlled",
        spec.to_str().unwrap(),
        "--epochs",
        "1",
        "--batch-size",
        "8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("framework"), "{stdout}");
    let table = std::fs::read_to_string(out_dir.join("matrix.txt")).unwrap();
    // avg(best) formatting like 12.50(10.00)
    assert!(table.contains('('), "{table}");
    assert!(out_dir.join("matrix.csv").exists());
    assert!(out_dir.join("run-matrix.json").exists());
}

#[test]
fn entropy_emits_csv_for_reference_voice() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let out = run_ok(&[
        "entropy",
        "--feature",
        "lfcc",
        "--bins",
        "32",
        "--seed",
        "7",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("magnitude"), "{stdout}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("frame,magnitude,phase,noise"));
    assert!(text.lines().last().unwrap().starts_with("mean,"));
}

/// Every declared flag shows up in the subcommand's --help text.
#[test]
fn help_documents_every_flag() {
    let flags: &[(&str, &[&str])] = &[
        ("synth", &["--spec", "--out"]),
        ("extract", &["--feature", "--with-phase", "--manifest", "--out"]),
        (
            "entropy",
            &["--feature", "--utt", "--bins", "--seed", "--ckpt", "--out"],
        ),
        (
            "train",
            &[
                "--framework",
                "--pairing",
                "--scenario",
                "--manifest",
                "--dev-manifest",
                "--controlled",
                "--backend",
                "--epochs",
                "--batch-size",
                "--lr",
                "--seed",
                "--deterministic",
                "--out",
            ],
        ),
        (
            "eval",
            &["--ckpt", "--manifest", "--controlled", "--batch-size", "--deterministic", "--out"],
        ),
        ("score", &["--scores", "--asv-op", "--breakdown", "--csv"]),
        (
            "matrix",
            &[
                "--frameworks",
                "--pairings",
                "--seeds",
                "--scenario",
                "--train-manifest",
                "--dev-manifest",
                "--eval-manifest",
                "--controlled",
                "--backend",
                "--epochs",
                "--batch-size",
                "--lr",
                "--asv-op",
                "--deterministic",
                "--out",
            ],
        ),
        ("selftest", &["--coords"]),
    ];
    for (sub, expected) in flags {
        let out = run_ok(&[sub, "--help"]);
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in *expected {
            assert!(text.contains(flag), "{sub} --help missing {flag}:\n{text}");
        }
    }
}
