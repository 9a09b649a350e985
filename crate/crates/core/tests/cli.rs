use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lrsdl::datamodel::load_matrix;
use lrsdl::learner::parse_trace_csv;
use lrsdl::linalg;

fn lrsdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrsdl")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", p(dir)];
    args.extend_from_slice(extra);
    let out = lrsdl(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn train(data: &Path, model: &Path, extra: &[&str]) -> Output {
    let y = data.join("Y.lmx");
    let l = data.join("labels.csv");
    let mut args = vec!["train", "--data", p(&y), "--labels", p(&l), "--out", p(model)];
    args.extend_from_slice(extra);
    lrsdl(&args)
}

#[test]
fn synth_writes_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--classes", "2", "--dim", "10", "--per-class", "5"]);
    assert_eq!(load_matrix(dir.path().join("Y.lmx")).unwrap().shape(), (10, 10));
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 10);
}

#[test]
fn synth_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--classes", "3", "--dim", "12", "--per-class", "4", "--k0", "4", "--noise", "0.1", "--seed", "9"];
    synth(a.path(), &flags);
    synth(b.path(), &flags);
    for f in ["Y.lmx", "labels.csv", "D.lmx", "D0.lmx"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn synth_plants_the_requested_shared_rank() {
    let dir = tempfile::tempdir().unwrap();
    synth(
        dir.path(),
        &["--classes", "2", "--dim", "20", "--per-class", "5", "--k0", "8", "--shared-rank", "3"],
    );
    let d0 = load_matrix(dir.path().join("D0.lmx")).unwrap();
    assert_eq!(d0.shape(), (20, 8));
    assert_eq!(linalg::numerical_rank(&d0, 1e-10).unwrap(), 3);
}

#[test]
fn invalid_sizes_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrsdl(&["synth", "--classes", "0", "--dim", "5", "--per-class", "2", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = lrsdl(&["synth", "--classes", "2", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_without_shared_atoms() {
    let data = tempfile::tempdir().unwrap();
    let model = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "3", "--dim", "12", "--per-class", "4", "--kc", "3"]);
    let out = train(data.path(), model.path(), &["--kc", "3", "--k0", "0", "--iters", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = fs::read_to_string(model.path().join("meta")).unwrap();
    assert!(meta.lines().any(|l| l == "k0=0"));
    assert!(meta.lines().any(|l| l == "format_version=1"));
    assert_eq!(fs::read(model.path().join("D0.lmx")).unwrap(), b"LMX 12 0\n");
    let trace = parse_trace_csv(&fs::read_to_string(model.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.len(), 1);
}

#[test]
fn retraining_reproduces_model_bytes() {
    let data = tempfile::tempdir().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "3", "--dim", "15", "--per-class", "5", "--k0", "4", "--noise", "0.1"]);
    let flags = ["--kc", "3", "--k0", "3", "--iters", "3", "--seed", "4"];
    assert!(train(data.path(), a.path(), &flags).status.success());
    assert!(train(data.path(), b.path(), &flags).status.success());
    for f in ["D.lmx", "D0.lmx", "means_mc.lmx", "mean_m0.lmx", "meta"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let trace = parse_trace_csv(&fs::read_to_string(a.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.len(), 3);
}

#[test]
fn numerical_abort_exits_with_three() {
    let data = tempfile::tempdir().unwrap();
    let model = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "2", "--dim", "8", "--per-class", "4", "--kc", "2"]);
    let out = train(data.path(), model.path(), &["--kc", "2", "--lambda2", "1.7e308", "--iters", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let meta = fs::read_to_string(model.path().join("meta")).unwrap();
    assert!(meta.lines().any(|l| l == "status=aborted"));
}

#[test]
fn classify_separable_training_set() {
    let data = tempfile::tempdir().unwrap();
    let model = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "4", "--dim", "60", "--per-class", "6", "--kc", "3", "--seed", "2"]);
    assert!(train(data.path(), model.path(), &["--kc", "3", "--iters", "5"]).status.success());
    let y = data.path().join("Y.lmx");
    let l = data.path().join("labels.csv");
    let out = lrsdl(&[
        "classify", "--model", p(model.path()), "--data", p(&y), "--labels", p(&l), "--w", "1", "--out",
        p(out_dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("accuracy=")).unwrap();
    let value = &line["accuracy=".len()..];
    assert_eq!(value.split('.').nth(1).unwrap().len(), 4);
    assert!(value.parse::<f64>().unwrap() >= 0.99, "{line}");
    let preds = fs::read_to_string(out_dir.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().next().unwrap(), "index,true_label,pred_label,score_pred");
    assert_eq!(preds.lines().count(), 25);
    let confusion = fs::read_to_string(out_dir.path().join("confusion.csv")).unwrap();
    let total: usize = confusion
        .lines()
        .flat_map(|l| l.split(',').map(|v| v.parse::<usize>().unwrap()))
        .sum();
    assert_eq!(total, 24);

    for w in ["0", "1"] {
        let dir = out_dir.path().join(format!("w{w}"));
        let out = lrsdl(&["classify", "--model", p(model.path()), "--data", p(&y), "--w", w, "--out", p(&dir)]);
        assert!(out.status.success());
        assert!(dir.join("predictions.csv").exists());
    }
}

#[test]
fn classify_error_paths() {
    let data = tempfile::tempdir().unwrap();
    let model = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "2", "--dim", "8", "--per-class", "4", "--kc", "2"]);
    assert!(train(data.path(), model.path(), &["--kc", "2", "--iters", "1"]).status.success());
    let y = data.path().join("Y.lmx");

    let out_dir = data.path().join("missing_out");
    let out = lrsdl(&["classify", "--model", p(&data.path().join("nope")), "--data", p(&y), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());

    let other = tempfile::tempdir().unwrap();
    synth(other.path(), &["--classes", "2", "--dim", "9", "--per-class", "4"]);
    let wrong = other.path().join("Y.lmx");
    let out = lrsdl(&["classify", "--model", p(model.path()), "--data", p(&wrong), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn bench_with_identical_coders() {
    let dir = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    synth(data.path(), &["--classes", "3", "--dim", "12", "--per-class", "4", "--kc", "3"]);
    let y = data.path().join("Y.lmx");
    let l = data.path().join("labels.csv");
    let out = lrsdl(&[
        "bench", "--data", p(&y), "--labels", p(&l), "--kc", "3", "--iters", "1", "--identical-coders", "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let field = |key: &str| {
        stdout
            .split_whitespace()
            .find_map(|t| t.strip_prefix(&format!("{key}=")))
            .unwrap()
            .to_string()
    };
    assert_eq!(field("joint_final"), field("seq_final"));
    for f in ["joint.csv", "sequential.csv"] {
        let trace = parse_trace_csv(&fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
        assert_eq!(trace.len(), 1);
    }
}
