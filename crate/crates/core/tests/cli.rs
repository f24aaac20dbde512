//! The command-line entry point: configs, manifests and exit codes.

use std::fs;

use bntk::cli::{run_from, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("bntk").chain(args.iter().copied()))
}

#[test]
fn gen_data_writes_the_csv_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let code = run(&["gen-data", "--kind", "projection", "--n-train", "12", "--n-test", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let inputs = fs::read_to_string(out.join("projection_inputs.csv")).unwrap();
    assert_eq!(inputs.lines().count(), 1 + 16);
    assert!(out.join("projection_targets.csv").exists());
}

#[test]
fn manifest_reruns_to_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let base = ["train-fs", "--preset", "synthetic", "--n-train", "30", "--n-test", "10", "--steps", "8", "--eval-every", "4", "--width", "128"];
    let mut args = base.to_vec();
    args.extend(["--out", first.to_str().unwrap()]);
    assert_eq!(run(&args), EXIT_OK);

    let second = dir.path().join("b");
    let manifest = first.join("manifest.txt");
    assert_eq!(run(&["train-fs", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]), EXIT_OK);
    let strip = |p: &std::path::Path| -> Vec<String> {
        let mut rdr = csv::Reader::from_path(p.join("metrics.csv")).unwrap();
        let headers = rdr.headers().unwrap().clone();
        let wall = headers.iter().position(|h| h == "wall_ms").unwrap();
        rdr.records()
            .map(|r| r.unwrap().iter().enumerate().filter(|(i, _)| *i != wall).map(|(_, v)| v.to_string()).collect::<Vec<_>>().join(","))
            .collect()
    };
    let rows = strip(&first);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows, strip(&second));
}

#[test]
fn explicit_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "preset = synthetic\nn_train = 20\nn_test = 5\nsteps = 2\nwidth = 64\nlr = 1\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["train-fs", "--config", cfg.to_str().unwrap(), "--lr", "3", "--out", out.to_str().unwrap()]), EXIT_OK);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "lr = 3"));
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    assert_eq!(run(&["train-fs", "--no-such-flag"]), EXIT_CONFIG);
    assert_eq!(run(&["train-fs", "--loss-scale", "-1"]), EXIT_CONFIG);
    assert_eq!(run(&["train-fs", "--config", "/nonexistent/run.cfg"]), EXIT_CONFIG);
    assert_eq!(run(&["train-fs", "--d", "0"]), EXIT_CONFIG);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "lr 3\n").unwrap();
    assert_eq!(run(&["train-fs", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let code = run(&[
        "train-fs", "--preset", "synthetic", "--n-train", "30", "--n-test", "5", "--steps", "20", "--width", "64", "--lr", "1e12",
        "--loss-scale", "sum", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_NUMERICAL);
}
