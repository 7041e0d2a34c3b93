use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neuralcd::checkpoint::{Checkpoint, Family};

fn neuralcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neuralcd"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = neuralcd(args);
    assert!(
        out.status.success(),
        "neuralcd {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    neuralcd(args).status.code().unwrap()
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
}

fn run_dir(stdout: &str) -> PathBuf {
    PathBuf::from(value(stdout, "run_dir"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Synth {
    _tmp: tempfile::TempDir,
    base: PathBuf,
    dir: PathBuf,
}

impl Synth {
    fn new(extra: &[&str]) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let base = tmp.path().to_path_buf();
        let mut args = vec![
            "synth",
            "--students",
            "30",
            "--exercises",
            "15",
            "--concepts",
            "4",
            "--seed",
            "3",
        ];
        args.extend(extra);
        args.extend(["--out-dir", path(&base)]);
        let dir = run_dir(&ok(&args));
        Synth { _tmp: tmp, base, dir }
    }

    fn file(&self, name: &str) -> String {
        path(&self.dir.join(name)).to_string()
    }

    fn train(&self, extra: &[&str]) -> String {
        let (logs, q) = (self.file("logs.csv"), self.file("qmatrix.csv"));
        let mut args = vec![
            "train",
            "--logs",
            &logs,
            "--qmatrix",
            &q,
            "--epochs",
            "2",
            "--h1",
            "8",
            "--h2",
            "4",
            "--out-dir",
            path(&self.base),
        ];
        args.extend(extra);
        ok(&args)
    }
}

#[test]
fn synth_writes_expected_files() {
    let s = Synth::new(&["--drop-rate", "0.3", "--spurious", "1"]);
    for name in [
        "config.toml",
        "logs.csv",
        "qmatrix.csv",
        "true_proficiency.csv",
        "observed_qmatrix.csv",
        "candidates.csv",
    ] {
        assert!(s.dir.join(name).exists(), "{name}");
    }
    let logs = fs::read_to_string(s.file("logs.csv")).unwrap();
    assert_eq!(logs.lines().next(), Some("student_id,exercise_id,score"));
    assert_eq!(logs.lines().count(), 1 + 30 * 15);
}

#[test]
fn stats_reports_counts() {
    let s = Synth::new(&[]);
    let out = ok(&[
        "stats",
        "--logs",
        &s.file("logs.csv"),
        "--qmatrix",
        &s.file("qmatrix.csv"),
    ]);
    assert_eq!(value(&out, "n_students"), "30");
    assert_eq!(value(&out, "n_exercises"), "15");
    assert_eq!(value(&out, "n_concepts"), "4");
    assert_eq!(value(&out, "n_logs"), "450");
    assert!(out.contains("#Knowledge concepts per exercise"));
}

#[test]
fn train_eval_diagnose_pipeline() {
    let s = Synth::new(&[]);
    let train = s.train(&["--doa"]);
    let dir = run_dir(&train);
    for name in [
        "config.toml",
        "checkpoint.txt",
        "id_map.csv",
        "history.csv",
        "train_logs.csv",
        "test_logs.csv",
        "eval.txt",
    ] {
        assert!(dir.join(name).exists(), "{name}");
    }
    assert_eq!(value(&train, "model"), "neuralcdm");
    let doa: f64 = value(&train, "doa").parse().unwrap();
    assert!((0.0..=1.0).contains(&doa));
    let config = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(
        config.contains("command = \"train\"") && config.contains("seed = 0"),
        "{config}"
    );

    // Re-evaluating the held-out logs reproduces the training report.
    let ckpt = dir.join("checkpoint.txt");
    let eval = ok(&[
        "eval",
        "--checkpoint",
        path(&ckpt),
        "--logs",
        path(&dir.join("test_logs.csv")),
        "--doa",
        "--out-dir",
        path(&s.base),
    ]);
    for key in ["n", "accuracy", "rmse", "auc"] {
        assert_eq!(value(&eval, key), value(&train, key), "{key}");
    }

    let diag = ok(&[
        "diagnose",
        "--checkpoint",
        path(&ckpt),
        "--students",
        "s0,s7",
        "--out-dir",
        path(&s.base),
    ]);
    assert_eq!(value(&diag, "students"), "2");
    let a = Checkpoint::load(&ckpt).unwrap().get("A").unwrap().clone();
    let id_map = fs::read_to_string(dir.join("id_map.csv")).unwrap();
    let index = |kind: &str, id: &str| -> usize {
        id_map
            .lines()
            .find_map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0] == kind && f[2] == id).then(|| f[1].parse().unwrap())
            })
            .unwrap()
    };
    let rows = fs::read_to_string(run_dir(&diag).join("proficiency.csv")).unwrap();
    let mut seen = 0;
    for line in rows.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let got: f64 = f[2].parse().unwrap();
        let want = 1.0 / (1.0 + (-a.get(index("student", f[0]), index("concept", f[1]))).exp());
        assert!((got - want).abs() < 1e-12, "{line} want {want}");
        seen += 1;
    }
    assert_eq!(seen, 2 * 4);
}

#[test]
fn refine_writes_relevancy() {
    let s = Synth::new(&["--drop-rate", "0.3", "--spurious", "1"]);
    let (logs, q, cand) = (
        s.file("logs.csv"),
        s.file("observed_qmatrix.csv"),
        s.file("candidates.csv"),
    );
    let out = ok(&[
        "refine",
        "--logs",
        &logs,
        "--qmatrix",
        &q,
        "--candidates",
        &cand,
        "--epochs",
        "2",
        "--h1",
        "8",
        "--h2",
        "4",
        "--out-dir",
        path(&s.base),
    ]);
    assert_eq!(value(&out, "model"), "neuralcdm+");
    let dir = run_dir(&out);
    let refined = fs::read_to_string(dir.join("refined_q.csv")).unwrap();
    assert_eq!(refined.lines().next(), Some("exercise_id,concept_id,relevancy"));
    for line in refined.lines().skip(1) {
        let r: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(r > 0.0 && r < 1.0, "{line}");
    }
    let ckpt = Checkpoint::load(dir.join("checkpoint.txt")).unwrap();
    assert_eq!(ckpt.family, Family::NeuralCdmPlus);
}

#[test]
fn baselines_train_and_evaluate() {
    let s = Synth::new(&[]);
    for model in ["irt", "mirt", "mf"] {
        let out = s.train(&["--model", model]);
        assert_eq!(value(&out, "model"), model);
        let dir = run_dir(&out);
        let eval = ok(&[
            "eval",
            "--checkpoint",
            path(&dir.join("checkpoint.txt")),
            "--logs",
            path(&dir.join("test_logs.csv")),
            "--out-dir",
            path(&s.base),
        ]);
        assert_eq!(value(&eval, "auc"), value(&out, "auc"), "{model}");
    }
}

#[test]
fn training_is_deterministic() {
    let s = Synth::new(&[]);
    let a = run_dir(&s.train(&["--seed", "4"]));
    let b = run_dir(&s.train(&["--seed", "4"]));
    assert_ne!(a, b);
    for name in ["checkpoint.txt", "history.csv", "eval.txt"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn usage_errors_exit_2() {
    let s = Synth::new(&[]);
    let (logs, q) = (s.file("logs.csv"), s.file("qmatrix.csv"));
    let base = path(&s.base);
    assert_eq!(
        code(&[
            "train",
            "--logs",
            &logs,
            "--qmatrix",
            &q,
            "--model",
            "neuralcdm+",
            "--out-dir",
            base
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--logs",
            &logs,
            "--qmatrix",
            &q,
            "--model",
            "mf",
            "--doa",
            "--out-dir",
            base
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--logs",
            &logs,
            "--qmatrix",
            &q,
            "--batch-size",
            "0",
            "--out-dir",
            base
        ]),
        2
    );
    assert_eq!(code(&["train", "--logs", &logs]), 2);
    assert_eq!(code(&["frobnicate"]), 2);

    let ckpt = run_dir(&s.train(&[])).join("checkpoint.txt");
    let out = neuralcd(&[
        "diagnose",
        "--checkpoint",
        path(&ckpt),
        "--students",
        "nobody",
        "--out-dir",
        base,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nobody"));
}

#[test]
fn data_errors_exit_3() {
    let s = Synth::new(&[]);
    let base = path(&s.base);
    let missing = s.base.join("missing.csv");
    let out = neuralcd(&["stats", "--logs", path(&missing), "--qmatrix", &s.file("qmatrix.csv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad = s.base.join("bad.csv");
    fs::write(&bad, "student_id,exercise_id,score\ns0,e0,1.5\n").unwrap();
    assert_eq!(
        code(&["stats", "--logs", path(&bad), "--qmatrix", &s.file("qmatrix.csv")]),
        3
    );

    let ckpt = run_dir(&s.train(&[])).join("checkpoint.txt");
    let strangers = s.base.join("strangers.csv");
    fs::write(&strangers, "student_id,exercise_id,score\nz9,e0,1\n").unwrap();
    assert_eq!(
        code(&[
            "eval",
            "--checkpoint",
            path(&ckpt),
            "--logs",
            path(&strangers),
            "--out-dir",
            base
        ]),
        3
    );
}

#[test]
fn divergence_exits_4() {
    let s = Synth::new(&[]);
    assert_eq!(
        code(&[
            "train",
            "--logs",
            &s.file("logs.csv"),
            "--qmatrix",
            &s.file("qmatrix.csv"),
            "--lr",
            "1.7e308",
            "--epochs",
            "1",
            "--h1",
            "8",
            "--h2",
            "4",
            "--out-dir",
            path(&s.base),
        ]),
        4
    );
}
