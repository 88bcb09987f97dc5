use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cnts_core::data::load_series_csv;
use cnts_core::{ReportFile, Role, TrainHistory};
use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"{
  "run_id": "fixture",
  "data": {"kind": "synth", "benchmark": {"length": 600, "spikes": 6, "level_shifts": 1}},
  "train": {"epochs": 2, "r_epochs": 2, "d_epochs": 1, "window": 16, "batch_size": 16},
  "eval": {"dataset": "synth"}
}"#;

fn cnts(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnts"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CNTS_RUNS_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn train_fixture(tmp: &TempDir, extra: &[&str]) -> PathBuf {
    write(tmp.path(), "c.json", SMALL);
    let mut args = vec!["train", "--config", "c.json"];
    args.extend_from_slice(extra);
    let stdout = ok(&cnts(&args, tmp.path()));
    tmp.path().join(stdout.trim())
}

#[test]
fn train_writes_the_run_layout() {
    let tmp = TempDir::new().unwrap();
    let run = train_fixture(&tmp, &[]);
    assert_eq!(run, tmp.path().join("runs/fixture"));
    for f in [
        "config.json",
        "manifest.json",
        "r.ckpt",
        "d.ckpt",
        "history.csv",
        "reports/report.json",
    ] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let history = TrainHistory::load_csv(run.join("history.csv")).unwrap();
    assert_eq!(history.len(), 2 * (2 + 1));

    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["mode"], "cnts");
    for a in manifest["artifacts"].as_array().unwrap() {
        assert!(run.join(a.as_str().unwrap()).is_file());
    }
    let ckpt = std::fs::read(run.join("r.ckpt")).unwrap();
    let digest = manifest["config_digest"].as_str().unwrap();
    assert!(ckpt.windows(digest.len()).any(|w| w == digest.as_bytes()));
}

#[test]
fn same_config_and_seed_give_identical_checkpoints() {
    let tmp = TempDir::new().unwrap();
    let a = train_fixture(&tmp, &["--out", "a"]);
    let b = train_fixture(&tmp, &["--out", "b"]);
    for f in ["r.ckpt", "d.ckpt", "history.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = train_fixture(&tmp, &["--out", "c", "--seed", "5"]);
    assert_ne!(
        std::fs::read(a.join("r.ckpt")).unwrap(),
        std::fs::read(c.join("r.ckpt")).unwrap()
    );
}

#[test]
fn baseline_r_mode_has_no_detector() {
    let tmp = TempDir::new().unwrap();
    let run = train_fixture(&tmp, &["--mode", "baseline_r"]);
    assert!(run.join("r.ckpt").is_file());
    assert!(!run.join("d.ckpt").exists());
    assert_eq!(
        TrainHistory::load_csv(run.join("history.csv"))
            .unwrap()
            .len(),
        2 * 2
    );
}

#[test]
fn runs_dir_env_overrides_default_root() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_cnts"))
        .args(["train", "--config", "c.json"])
        .current_dir(tmp.path())
        .env("CNTS_RUNS_DIR", "elsewhere")
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("elsewhere/fixture/manifest.json").is_file());
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn missing_dataset_fails_before_creating_a_run() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"run_id": "x", "data": {"kind": "files", "train": "absent.csv"}}"#,
    );
    let out = cnts(&["train", "--config", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn bad_config_and_unsafe_run_id_are_validation_errors() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "typo.json",
        r#"{"data": {"kind": "synth"}, "train": {"epoch": 3}}"#,
    );
    assert_eq!(
        cnts(&["train", "--config", "typo.json"], tmp.path())
            .status
            .code(),
        Some(2)
    );
    write(
        tmp.path(),
        "id.json",
        r#"{"run_id": "../up", "data": {"kind": "synth"}}"#,
    );
    assert_eq!(
        cnts(&["train", "--config", "id.json"], tmp.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cnts(&["train", "--config", "missing.json"], tmp.path())
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn numeric_blow_up_is_flagged_in_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = SMALL.replace(
        r#""batch_size": 16"#,
        r#""batch_size": 16, "optimizer": {"learning_rate": 1e300}"#,
    );
    write(tmp.path(), "c.json", &cfg);
    let out = cnts(&["train", "--config", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let manifest = json(&tmp.path().join("runs/fixture/manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("non-finite"));
    assert_eq!(manifest["artifacts"], serde_json::json!(["config.json"]));
    assert!(!tmp.path().join("runs/fixture/r.ckpt").exists());
}

#[test]
fn eval_of_one_series_aggregates_to_itself() {
    let tmp = TempDir::new().unwrap();
    let run = train_fixture(&tmp, &[]);
    let out = tmp.path().join("again.json");
    ok(&cnts(
        &[
            "eval",
            run.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    ));
    let report = ReportFile::load(&out).unwrap();
    assert_eq!(
        report,
        ReportFile::load(run.join("reports/report.json")).unwrap()
    );
    assert_eq!(report.series.len(), 1);
    let (s, a) = (&report.series[0], &report.aggregate);
    assert_eq!((a.acc, a.f1, a.auc), (s.acc, s.f1, s.auc));
    assert_eq!(a.series_count, 1);
    assert_eq!(a.dataset, "synth");

    // documented schema: exactly these keys
    let v = json(&out);
    let keys = |o: &Value| {
        let mut k: Vec<String> = o.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&v), ["aggregate", "series"]);
    assert_eq!(
        keys(&v["aggregate"]),
        ["acc", "auc", "dataset", "f1", "series_count"]
    );
    assert_eq!(
        keys(&v["series"][0]),
        [
            "acc",
            "auc",
            "dis",
            "f1",
            "fn",
            "fp",
            "mse_a",
            "mse_n",
            "precision",
            "recall",
            "series",
            "threshold",
            "tn",
            "tp"
        ]
    );
}

#[test]
fn eval_checks_labels_and_checkpoint_provenance() {
    let tmp = TempDir::new().unwrap();
    let run = train_fixture(&tmp, &[]);
    let run_s = run.to_str().unwrap();
    write(
        tmp.path(),
        "plain.csv",
        "value\n1\n2\n3\n4\n5\n6\n7\n8\n9\n10\n11\n12\n13\n14\n15\n16\n17\n",
    );
    assert_eq!(
        cnts(&["eval", run_s, "--test", "plain.csv"], tmp.path())
            .status
            .code(),
        Some(2)
    );

    let other = train_fixture(&tmp, &["--out", "other", "--seed", "3"]);
    std::fs::copy(other.join("d.ckpt"), run.join("d.ckpt")).unwrap();
    let out = cnts(&["eval", run_s], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("written by config"));
}

#[test]
fn eval_accepts_explicit_series_files() {
    let tmp = TempDir::new().unwrap();
    let run = train_fixture(&tmp, &[]);
    ok(&cnts(
        &["synth", "--out", "data", "--seed", "8"],
        tmp.path(),
    ));
    let stdout = ok(&cnts(
        &[
            "eval",
            run.to_str().unwrap(),
            "--test",
            "data/test.csv",
            "--out",
            "r.json",
        ],
        tmp.path(),
    ));
    assert!(stdout.contains("| test |"));
    assert_eq!(
        ReportFile::load(tmp.path().join("r.json")).unwrap().series[0].series,
        "test"
    );
}

#[test]
fn synth_writes_an_unsupervised_pair() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&cnts(&["synth", "--out", "d1", "--seed", "4"], tmp.path()));
    let train = load_series_csv(tmp.path().join("d1/train.csv"), Role::Train).unwrap();
    let test = load_series_csv(tmp.path().join("d1/test.csv"), Role::Test).unwrap();
    assert!(train.labels().is_none());
    let labels = test.labels().unwrap();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let printed = format!(
        "label rate {:.4} ({positives}/{})",
        positives as f64 / labels.len() as f64,
        labels.len()
    );
    assert_eq!(stdout.trim(), printed);

    ok(&cnts(&["synth", "--out", "d2", "--seed", "4"], tmp.path()));
    ok(&cnts(&["synth", "--out", "d3", "--seed", "5"], tmp.path()));
    let read = |p: &str| std::fs::read(tmp.path().join(p)).unwrap();
    assert_eq!(read("d1/test.csv"), read("d2/test.csv"));
    assert_ne!(read("d1/test.csv"), read("d3/test.csv"));
}

#[test]
fn ablate_compares_three_modes() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", SMALL);
    let stdout = ok(&cnts(
        &["ablate", "--config", "c.json", "--seed", "2"],
        tmp.path(),
    ));
    let root = tmp.path().join("runs/ablate-fixture");
    let table = std::fs::read_to_string(root.join("comparison.csv")).unwrap();
    assert_eq!(stdout, table);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "mode,f1,auc,dis");
    assert_eq!(lines.len(), 1 + 3);
    for (line, mode) in lines[1..]
        .iter()
        .zip(["cnts", "baseline_r", "baseline_detection"])
    {
        assert!(line.starts_with(&format!("{mode},")));
        let history = TrainHistory::load_csv(root.join(mode).join("history.csv")).unwrap();
        let curve =
            std::fs::read_to_string(root.join("curves").join(format!("{mode}.csv"))).unwrap();
        assert_eq!(curve.lines().count(), 1 + history.len());
        assert!(history.records.iter().all(|r| r.monitor.is_some()));
        assert_eq!(json(&root.join(mode).join("manifest.json"))["seed"], 2);
    }
}

#[test]
fn report_merges_runs_and_flags_differing_configs() {
    let tmp = TempDir::new().unwrap();
    let a = train_fixture(&tmp, &["--out", "a"]);
    let b = train_fixture(&tmp, &["--out", "b", "--seed", "1"]);

    let single = cnts(
        &["report", a.to_str().unwrap(), "--out", "one.csv"],
        tmp.path(),
    );
    ok(&single);
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("one.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    assert!(single.stderr.is_empty());

    let pair = cnts(
        &[
            "report",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--out",
            "two.csv",
        ],
        tmp.path(),
    );
    let stdout = ok(&pair);
    // a different seed alone is not a configuration change
    assert!(pair.stderr.is_empty());
    let reports: Vec<ReportFile> = [&a, &b]
        .iter()
        .map(|r| ReportFile::load(r.join("reports/report.json")).unwrap())
        .collect();
    let mean_f1 = (reports[0].aggregate.f1 + reports[1].aggregate.f1) / 2.0;
    let mean_auc = (reports[0].aggregate.auc + reports[1].aggregate.auc) / 2.0;
    let mean_row = stdout.lines().find(|l| l.starts_with("| mean")).unwrap();
    let cells: Vec<&str> = mean_row.split('|').map(str::trim).collect();
    assert_eq!(cells[7], format!("{mean_f1:.4}"));
    assert_eq!(cells[8], format!("{mean_auc:.4}"));

    let csv = std::fs::read_to_string(tmp.path().join("two.csv")).unwrap();
    let f1s: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert_eq!(f1s, [reports[0].aggregate.f1, reports[1].aggregate.f1]);

    let changed = SMALL.replace(r#""epochs": 2"#, r#""epochs": 1"#);
    write(tmp.path(), "c2.json", &changed);
    let c = tmp.path().join(
        ok(&cnts(
            &["train", "--config", "c2.json", "--out", "c"],
            tmp.path(),
        ))
        .trim(),
    );
    let mixed = cnts(
        &["report", a.to_str().unwrap(), c.to_str().unwrap()],
        tmp.path(),
    );
    ok(&mixed);
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("warning"));
}

#[test]
fn report_rejects_unfinished_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = SMALL.replace(
        r#""batch_size": 16"#,
        r#""batch_size": 16, "optimizer": {"learning_rate": 1e300}"#,
    );
    write(tmp.path(), "c.json", &cfg);
    cnts(&["train", "--config", "c.json"], tmp.path());
    let out = cnts(&["report", "runs/fixture"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not complete"));
}
