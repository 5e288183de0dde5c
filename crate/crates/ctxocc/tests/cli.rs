use std::path::Path;
use std::process::{Command, Output};

fn ctxocc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxocc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by a signal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "# two frameworks\nlength = 8000\nfolds = 2\ncalibration_length = 1000\nframework = single,occomplete\n",
    )
    .unwrap();
    let o = ctxocc(
        &["run", "--config", "exp.cfg", "--seed", "3", "--out", "r"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("occomplete/sa\tmean prequential AUC"));
    let manifest = std::fs::read_to_string(dir.path().join("r/manifest.txt")).unwrap();
    assert!(manifest.contains("\nseed = 3\n"), "{manifest}");

    let o = ctxocc(
        &[
            "compare",
            "r",
            "--out",
            "r/cbtt.csv",
            "--baseline",
            "single/sa",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("occomplete/sa vs single/sa\tp_left"));
    assert!(dir.path().join("r/cbtt.csv").exists());
}

#[test]
fn trailing_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctxocc(
        &[
            "run",
            "--length=7000",
            "--folds",
            "2",
            "--calibration_length=0",
            "--threshold=0.02",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("o/manifest.txt")).unwrap();
    assert!(
        manifest.contains("length = 7000") && manifest.contains("threshold = 0.02"),
        "{manifest}"
    );
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "seed = 1\nflavour = mint\n").unwrap();
    for args in [
        vec!["run", "--config", "bad.cfg"],
        vec!["run", "--folds=1"],
        vec!["run", "--config", "missing.cfg"],
        vec!["window-size", "--probabilities", "0.5,0.7", "--tau", "3"],
        vec![
            "cluster-distance",
            "--center-a",
            "0,0",
            "--radius-a",
            "-1",
            "--center-b",
            "1,0",
            "--radius-b",
            "1",
        ],
    ] {
        let o = ctxocc(&args, dir.path());
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
}

#[test]
fn initialization_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("a,class\n");
    for i in 0..50 {
        body.push_str(&format!("{},0\n", i as f64 / 50.0));
    }
    std::fs::write(dir.path().join("short.csv"), body).unwrap();
    let o = ctxocc(
        &[
            "run",
            "--stream=csv",
            "--csv.path=short.csv",
            "--contexts=1",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn window_size_and_cluster_distance() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctxocc(
        &["window-size", "--probabilities", "0.1,0.9", "--tau", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("n = 84\n"), "{}", stdout(&o));

    let o = ctxocc(
        &[
            "cluster-distance",
            "--center-a=-1",
            "--radius-a",
            "1",
            "--center-b",
            "2",
            "--radius-b",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "raw = 4\nnormalized = 1\n");
}
