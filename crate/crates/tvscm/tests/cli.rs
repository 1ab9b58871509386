use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tvscm::core::data::{write_idx_images, write_idx_labels, IdxImages};
use tvscm::core::nn::Model;
use tvscm::io::{MNIST_TEST_IMAGES, MNIST_TEST_LABELS, MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS};
use tvscm::manifest::RunManifest;

fn tvscm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvscm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inspect_examples() {
    let out = stdout(&tvscm(&["inspect", "--a", "1", "--b", "2", "--n", "4"]));
    assert!(out.contains("spectrum = [6, 0, -2, 0]"), "{out}");
    assert!(out.contains("rank = 2") && out.contains("parameters = 2"));

    let out = stdout(&tvscm(&["inspect", "--a", "1", "--b", "3", "--n", "5"]));
    assert!(out.contains("v_sym = [1, 2, 2, 2, 2]"), "{out}");
    assert!(out.contains("rank = 5"));

    let out = stdout(&tvscm(&["inspect", "--a", "0", "--b", "0", "--n", "8"]));
    assert!(out.contains("spectrum = [0, 0, 0, 0, 0, 0, 0, 0]") && out.contains("rank = 0"));

    let out = stdout(&tvscm(&["inspect", "--a", "-1.5", "--b", "2", "--n", "784"]));
    assert!(out.contains("(768 more)") && out.contains("rank = 2"), "{out}");
}

#[test]
fn synthetic_training_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "train", "--dataset", "synthetic", "--arch", "tvscm", "--epochs", "2", "--seed", "7",
            "--out", path(&out),
        ];
        stdout(&tvscm(&args));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["report.json", "report.csv", "model.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let manifest = RunManifest::read(&a.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "train");
    assert_eq!(manifest.seed, Some(7));
    assert_eq!(manifest.datasets[0].samples, 2000);
    assert!(manifest.args.windows(2).any(|w| w == ["--epochs", "2"]));
    assert!(manifest.args.windows(2).any(|w| w == ["--batch", "32"]));

    // Replaying the manifest into a fresh directory reproduces the report.
    let c = dir.path().join("c");
    stdout(&tvscm(&["replay", "--manifest", path(&a.join("manifest.json")), "--out", path(&c)]));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(c.join("report.json")).unwrap());

    // Eval on the recorded synthetic split matches the final test accuracy.
    let eval = stdout(&tvscm(&[
        "eval", "--dataset", "synthetic", "--data-seed", "7", "--model", path(&a.join("model.json")),
    ]));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let final_acc = report["epochs"][1]["test_acc"].as_f64().unwrap();
    assert!(eval.starts_with(&format!("accuracy={final_acc:.4}")), "{eval}");
}

#[test]
fn timing_flag_fills_seconds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    stdout(&tvscm(&[
        "train", "--dataset", "synthetic", "--arch", "dense", "--epochs", "1", "--timing", "--out",
        path(&out),
    ]));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["epochs"][0]["seconds"].as_f64().unwrap() >= 0.0);
}

fn mnist_fixture(dir: &Path) {
    let count = 64;
    let pixels: Vec<u8> = (0..count * 784).map(|i| ((i * 37) % 256) as u8).collect();
    let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
    let images = write_idx_images(&IdxImages {
        count,
        rows: 28,
        cols: 28,
        pixels,
    });
    for (img, lab) in [
        (MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS),
        (MNIST_TEST_IMAGES, MNIST_TEST_LABELS),
    ] {
        fs::write(dir.join(img), &images).unwrap();
        fs::write(dir.join(lab), write_idx_labels(&labels)).unwrap();
    }
}

#[test]
fn mnist_checkpoints_have_published_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mnist");
    fs::create_dir(&data).unwrap();
    mnist_fixture(&data);
    for (arch, count) in [("dense", 623_290), ("tvscm", 7_852)] {
        let out = dir.path().join(arch);
        stdout(&tvscm(&[
            "train", "--dataset", "mnist", "--data-dir", path(&data), "--arch", arch, "--epochs",
            "1", "--out", path(&out),
        ]));
        let text = fs::read_to_string(out.join("model.json")).unwrap();
        assert_eq!(Model::from_checkpoint_json(&text).unwrap().parameter_count(), count);
    }

    let bench_out = dir.path().join("bench");
    let out = stdout(&tvscm(&[
        "bench", "--model", path(&dir.path().join("tvscm/model.json")), "--batches", "1",
        "--reps", "100", "--warmup", "50", "--out", path(&bench_out),
    ]));
    assert!(out.contains("bytes=31408"), "{out}");
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(bench_out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["weight_bytes"], 31_408);
    assert!(bench_out.join("bench.csv").exists() && bench_out.join("manifest.json").exists());
}

#[test]
fn bench_defaults_to_the_published_batch_sizes() {
    use clap::Parser;
    use tvscm::cli::{Cli, Command};
    let cli = Cli::try_parse_from(["tvscm", "bench", "--model", "m.json", "--out", "o"]).unwrap();
    let Command::Bench(args) = cli.command else {
        panic!("expected bench");
    };
    assert_eq!(args.batches, vec![1, 8, 32, 128]);
}

#[test]
fn failures_exit_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());

    let bogus = tvscm(&["train", "--dataset", "synthetic", "--arch", "bogus", "--out", out]);
    assert_eq!(bogus.status.code(), Some(2));

    let unknown = tvscm(&["train", "--dataset", "cifar", "--arch", "dense", "--out", out]);
    assert_eq!(unknown.status.code(), Some(2));

    let no_dir = tvscm(&["train", "--dataset", "mnist", "--arch", "dense", "--out", out]);
    assert_eq!(no_dir.status.code(), Some(2));

    let missing = tvscm(&["eval", "--dataset", "synthetic", "--model", "/does/not/exist.json"]);
    assert_eq!(missing.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");

    let reps = tvscm(&["bench", "--model", "/does/not/exist.json", "--reps", "10", "--out", out]);
    assert_eq!(reps.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&reps.stderr).contains("minimum of 100"));

    let diverge = tvscm(&[
        "train", "--dataset", "synthetic", "--arch", "dense", "--epochs", "1", "--optimizer", "sgd",
        "--lr", "1e300", "--out", out,
    ]);
    assert_eq!(diverge.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&diverge.stderr).contains("epoch 1"));
}
