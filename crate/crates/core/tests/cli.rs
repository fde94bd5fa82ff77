use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lhessian");

fn lhessian(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("LHESSIAN_OUTDIR")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TRAIN: [&str; 8] = ["--name", "blobs", "--n", "120", "--iterations", "20", "--checkpoint-every", "10"];

fn train(dir: &Path, outdir: &str, seed: &str, extra: &[&str]) -> Output {
    let mut args = vec!["--seed", seed, "--outdir", outdir, "train"];
    args.extend_from_slice(&SMALL_TRAIN);
    args.extend_from_slice(extra);
    lhessian(dir, &args)
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn generate_writes_named_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lhessian(tmp.path(), &["--seed", "4", "--outdir", "out", "generate", "--name", "moons", "--n", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = tmp.path().join("out/moons-n50-s4.csv");
    assert!(stdout(&o).contains("50 rows"));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn generate_honours_explicit_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lhessian(tmp.path(), &["generate", "--name", "friedman1", "--n", "30", "--output", "f.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("f.csv").exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(lhessian(tmp.path(), &["generate", "--name", "spirals"]).status.code(), Some(2));
    assert_eq!(lhessian(tmp.path(), &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(lhessian(tmp.path(), &["preset", "nope"]).status.code(), Some(2));
    let o = train(tmp.path(), "out", "1", &["--loss", "mse"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(lhessian(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn train_writes_selected_variants_only() {
    let tmp = tempfile::tempdir().unwrap();
    let o = train(tmp.path(), "out", "3", &["--variant", "no,sure"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> = sorted_files(&tmp.path().join("out"))
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["blobs-no-s3.snapshots.jsonl", "blobs-sure-s3.snapshots.jsonl"]);
    let v = lhessian(tmp.path(), &["validate", "out/blobs-no-s3.snapshots.jsonl", "out/blobs-sure-s3.snapshots.jsonl"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v).matches("valid (3 snapshots)").count(), 2);
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(train(tmp.path(), "a", "9", &["--jobs", "1"]).status.success());
    assert!(train(tmp.path(), "b", "9", &["--jobs", "3"]).status.success());
    let (a, b) = (sorted_files(&tmp.path().join("a")), sorted_files(&tmp.path().join("b")));
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
    // A different seed changes the streams.
    assert!(train(tmp.path(), "c", "10", &[]).status.success());
    assert!(fs::read(&a[0]).unwrap() != fs::read(sorted_files(&tmp.path().join("c"))[0].clone()).unwrap());
}

#[test]
fn analyze_single_stream_skips_pca_with_notice() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(train(tmp.path(), "out", "2", &["--variant", "huge"]).status.success());
    let o = lhessian(tmp.path(), &["--outdir", "out", "analyze", "out/blobs-huge-s2.snapshots.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("notice:"));
    assert!(tmp.path().join("out/analysis.score_stats.csv").exists());
    assert!(!tmp.path().join("out/analysis.pca.csv").exists());
}

#[test]
fn corrupted_stream_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(train(tmp.path(), "out", "2", &["--variant", "no"]).status.success());
    let path = tmp.path().join("out/blobs-no-s2.snapshots.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("\"iteration\":", "\"iter\":", 1)).unwrap();
    for verb in ["validate", "analyze", "diagnose"] {
        let o = lhessian(tmp.path(), &[verb, "out/blobs-no-s2.snapshots.jsonl"]);
        assert_eq!(o.status.code(), Some(4), "{verb}: {}", stderr(&o));
    }
    fs::write(tmp.path().join("empty.jsonl"), "").unwrap();
    assert_eq!(lhessian(tmp.path(), &["analyze", "empty.jsonl"]).status.code(), Some(4));
    assert_eq!(lhessian(tmp.path(), &["validate", "missing.jsonl"]).status.code(), Some(4));
}

#[test]
fn diagnose_prints_report_and_writes_json() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(train(tmp.path(), "out", "2", &["--variant", "sure"]).status.success());
    let o = lhessian(tmp.path(), &["--outdir", "out", "diagnose", "out/blobs-sure-s2.snapshots.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // The identity output layer always has a zero local Hessian.
    assert!(stdout(&o).contains("overparameterized_near_zero"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/blobs-sure-s2.diagnostics.json")).unwrap()).unwrap();
    assert_eq!(json["run_id"], "blobs-sure-s2");
    assert!(json["flags"].as_array().is_some_and(|f| !f.is_empty()));

    let loose = lhessian(
        tmp.path(),
        &["--outdir", "out", "diagnose", "out/blobs-sure-s2.snapshots.jsonl", "--near-zero-fraction", "1.0", "--low-rank-ratio", "0.0"],
    );
    assert!(!stdout(&loose).contains("overparameterized_near_zero"));
}

#[test]
fn config_file_and_env_outdir() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.cfg"),
        "# small run\nseed = 6\noutdir = fromcfg\ndataset.name = circles\ndataset.n = 60\n",
    )
    .unwrap();
    let o = lhessian(tmp.path(), &["--config", "run.cfg", "generate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("fromcfg/circles-n60-s6.csv").exists());

    // Flags beat the config file.
    let o = lhessian(tmp.path(), &["--config", "run.cfg", "--seed", "8", "--outdir", "flag", "generate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("flag/circles-n60-s8.csv").exists());

    let o = Command::new(BIN)
        .args(["generate", "--name", "blobs", "--n", "20"])
        .current_dir(tmp.path())
        .env("LHESSIAN_OUTDIR", "fromenv")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("fromenv/blobs-n20-s0.csv").exists());

    fs::write(tmp.path().join("bad.cfg"), "train.colour = red\n").unwrap();
    assert_eq!(lhessian(tmp.path(), &["--config", "bad.cfg", "generate"]).status.code(), Some(2));
}
