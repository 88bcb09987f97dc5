use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use cnts_core::data::{
    load_series_csv, ranges_from_labels, write_ranges_csv, write_series_csv, BenchmarkSpec,
};
use cnts_core::models::Checkpoint;
use cnts_core::train::train;
use cnts_core::{
    CntsError, DetectorModel, ReconstructorModel, ReportFile, Role, TimeSeries, TrainHistory,
    TrainMode, TrainedModels,
};

use crate::config::{Dataset, ExperimentConfig, Overrides};
use crate::run::{self, create_dir, read_text, write_text, RunManifest, RunStatus};

/// Validates, loads data, then trains into `<root>/<run id>`.
pub fn train_cmd(config: &Path, o: &Overrides) -> anyhow::Result<PathBuf> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply(o);
    cfg.validate()?;
    let data = cfg.load_data()?;
    let dir = cfg.runs_root(o).join(cfg.run_id());
    train_run(&cfg, &data, &dir)?;
    println!("{}", dir.display());
    Ok(dir)
}

fn clear_previous(dir: &Path) -> anyhow::Result<()> {
    for name in [run::R_CKPT, run::D_CKPT, run::HISTORY, run::REPORT] {
        let p = dir.join(name);
        if p.is_file() {
            std::fs::remove_file(&p).map_err(|e| CntsError::io(&p, e))?;
        }
    }
    Ok(())
}

pub fn train_run(cfg: &ExperimentConfig, data: &Dataset, dir: &Path) -> anyhow::Result<()> {
    create_dir(&dir.join(run::REPORTS))?;
    clear_previous(dir)?;
    let digest = cfg.digest();
    let mut public = cfg.clone();
    public.out_dir = None;
    write_text(
        &dir.join(run::CONFIG),
        &serde_json::to_string_pretty(&public)?,
    )?;
    let mut manifest = RunManifest {
        version: run::version(),
        run_id: cfg.run_id(),
        mode: cfg.mode,
        status: RunStatus::Running,
        error: None,
        config_digest: digest.clone(),
        train_digest: cfg.train.digest(),
        seed: cfg.train.seed,
        norm: None,
        artifacts: vec![run::CONFIG.into()],
        model_digests: vec![],
        wall_clock_seconds: 0.0,
    };
    manifest.save(dir)?;

    let started = Instant::now();
    let monitor = data.monitor.as_ref().or(if cfg.eval.monitor_test {
        data.test.first()
    } else {
        None
    });
    let result = train(cfg.mode, &data.train, &cfg.train, monitor)
        .map_err(anyhow::Error::from)
        .and_then(|models| {
            save_models(&models, dir, &digest, &mut manifest)?;
            if !data.test.is_empty() {
                let report =
                    evaluate_models(&models, &data.test, &cfg.eval.dataset, cfg.eval.stride)?;
                report.save(dir.join(run::REPORT))?;
                manifest.artifacts.push(run::REPORT.into());
            }
            Ok(())
        });
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    match result {
        Ok(()) => {
            manifest.status = RunStatus::Complete;
            manifest.save(dir)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(run::describe(&e));
            manifest.save(dir)?;
            Err(e.context(format!("run {} failed", dir.display())))
        }
    }
}

fn save_models(
    models: &TrainedModels,
    dir: &Path,
    digest: &str,
    manifest: &mut RunManifest,
) -> anyhow::Result<()> {
    manifest.norm = models.norm;
    models
        .reconstructor
        .save_checkpoint(dir.join(run::R_CKPT), digest)?;
    manifest.artifacts.push(run::R_CKPT.into());
    manifest
        .model_digests
        .push((run::R_CKPT.into(), models.reconstructor.digest()));
    if let Some(d) = &models.detector {
        d.save_checkpoint(dir.join(run::D_CKPT), digest)?;
        manifest.artifacts.push(run::D_CKPT.into());
        manifest
            .model_digests
            .push((run::D_CKPT.into(), d.digest()));
    }
    models.history.save_csv(dir.join(run::HISTORY))?;
    manifest.artifacts.push(run::HISTORY.into());
    Ok(())
}

fn evaluate_models(
    models: &TrainedModels,
    tests: &[TimeSeries],
    dataset: &str,
    stride: usize,
) -> anyhow::Result<ReportFile> {
    let reports = tests
        .iter()
        .map(|t| {
            models
                .evaluate(t, stride)
                .map_err(|e| e.context(format!("series {}", t.name())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReportFile::new(dataset, reports)?)
}

fn check_digest(path: &Path, expected: &str) -> anyhow::Result<()> {
    let ckpt = Checkpoint::load(path)?;
    if ckpt.config_digest != expected {
        bail!(CntsError::Validation(format!(
            "{} was written by config {}, manifest says {}",
            path.display(),
            ckpt.config_digest,
            expected
        )));
    }
    Ok(())
}

/// Reloads the models of a finished run.
pub fn load_run(dir: &Path) -> anyhow::Result<(ExperimentConfig, RunManifest, TrainedModels)> {
    let manifest = RunManifest::load(dir)?;
    if manifest.status != RunStatus::Complete {
        bail!(CntsError::Validation(format!(
            "run {} did not complete ({:?})",
            dir.display(),
            manifest.status
        )));
    }
    manifest.check_artifacts(dir)?;
    let cfg: ExperimentConfig = serde_json::from_str(&read_text(&dir.join(run::CONFIG))?)
        .with_context(|| format!("parsing {}", dir.join(run::CONFIG).display()))?;
    let r_path = dir.join(run::R_CKPT);
    check_digest(&r_path, &manifest.config_digest)?;
    let reconstructor = ReconstructorModel::load_checkpoint(&r_path)?;
    let detector = if manifest.mode == TrainMode::BaselineR {
        None
    } else {
        let d_path = dir.join(run::D_CKPT);
        check_digest(&d_path, &manifest.config_digest)?;
        Some(DetectorModel::load_checkpoint(&d_path)?)
    };
    let models = TrainedModels {
        mode: manifest.mode,
        reconstructor,
        detector,
        history: TrainHistory::load_csv(dir.join(run::HISTORY))?,
        norm: manifest.norm,
    };
    Ok((cfg, manifest, models))
}

/// Scores labeled series with a finished run; without explicit series the config's test set is used.
pub fn eval_cmd(dir: &Path, tests: &[PathBuf], out: Option<&Path>) -> anyhow::Result<ReportFile> {
    let (cfg, _, models) = load_run(dir)?;
    let series = if tests.is_empty() {
        let data = cfg.load_data()?;
        if data.test.is_empty() {
            bail!(CntsError::Validation(
                "no test series given and none configured".into()
            ));
        }
        data.test
    } else {
        tests
            .iter()
            .map(|p| load_series_csv(p, Role::Test))
            .collect::<Result<Vec<_>, _>>()?
    };
    let report = evaluate_models(&models, &series, &cfg.eval.dataset, cfg.eval.stride)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => dir.join(run::REPORT),
    };
    report.save(&path)?;
    print!("{}", report_table(&report));
    Ok(report)
}

fn report_table(report: &ReportFile) -> String {
    let mut s = String::from("| series | acc | f1 | auc | dis |\n|---|---|---|---|---|\n");
    for r in &report.series {
        let _ = writeln!(
            s,
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            r.series, r.acc, r.f1, r.auc, r.dis
        );
    }
    let a = &report.aggregate;
    let _ = writeln!(
        s,
        "| {} (mean of {}) | {:.4} | {:.4} | {:.4} | |",
        a.dataset, a.series_count, a.acc, a.f1, a.auc
    );
    s
}

/// Writes a generated `train.csv` (unlabeled), `test.csv` (labeled) and `test_ranges.csv`.
pub fn synth_cmd(out: &Path, seed: u64, spec: Option<&Path>) -> anyhow::Result<f64> {
    let spec: BenchmarkSpec = match spec {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => BenchmarkSpec::default(),
    };
    let (train, test) = spec.generate(seed)?;
    create_dir(out)?;
    write_series_csv(&train, out.join("train.csv"))?;
    write_series_csv(&test, out.join("test.csv"))?;
    let labels = test.require_labels()?;
    write_ranges_csv(&ranges_from_labels(labels), out.join("test_ranges.csv"))?;
    write_text(
        &out.join("benchmark.json"),
        &serde_json::to_string_pretty(&spec)?,
    )?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let rate = positives as f64 / labels.len() as f64;
    println!("label rate {rate:.4} ({positives}/{})", labels.len());
    Ok(rate)
}

pub struct AblationRow {
    pub mode: TrainMode,
    pub f1: f64,
    pub auc: f64,
    pub dis: f64,
}

pub const COMPARISON_HEADER: &str = "mode,f1,auc,dis";
pub const CURVE_HEADER: &str = "stage,phase,sub_epoch,dis,f1";

/// Trains all three modes on the same data and seed under `<root>/ablate-<id>/<mode>`.
pub fn ablate_cmd(config: &Path, o: &Overrides) -> anyhow::Result<Vec<AblationRow>> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply(o);
    let id = match &cfg.run_id {
        Some(id) => format!("ablate-{id}"),
        None => format!("ablate-seed{}", cfg.train.seed),
    };
    cfg.eval.monitor_test = true;
    cfg.validate()?;
    let data = cfg.load_data()?;
    if data.test.is_empty() && data.monitor.is_none() {
        bail!(CntsError::Validation(
            "ablation needs a labeled test series".into()
        ));
    }
    let root = create_dir(&cfg.runs_root(o).join(id))?;

    let configs: Vec<ExperimentConfig> = TrainMode::ALL
        .iter()
        .map(|&mode| ExperimentConfig {
            mode,
            run_id: Some(mode.as_str().to_string()),
            ..cfg.clone()
        })
        .collect();
    // the modes share nothing mutable
    let results: Vec<anyhow::Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let (data, dir) = (&data, root.join(c.run_id()));
                s.spawn(move || train_run(c, data, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    for r in results {
        r?;
    }

    let mut rows = Vec::new();
    let mut table = format!("{COMPARISON_HEADER}\n");
    create_dir(&root.join("curves"))?;
    for c in &configs {
        let dir = root.join(c.run_id());
        let (_, manifest, models) = load_run(&dir)?;
        let report = ReportFile::load(dir.join(run::REPORT))?;
        let dis = report.series.iter().map(|r| r.dis).sum::<f64>() / report.series.len() as f64;
        let row = AblationRow {
            mode: manifest.mode,
            f1: report.aggregate.f1,
            auc: report.aggregate.auc,
            dis,
        };
        let _ = writeln!(
            table,
            "{},{},{},{}",
            row.mode.as_str(),
            row.f1,
            row.auc,
            row.dis
        );
        let mut curve = format!("{CURVE_HEADER}\n");
        for r in &models.history.records {
            let m = r
                .monitor
                .context("history record without monitor metrics")?;
            let _ = writeln!(
                curve,
                "{},{},{},{},{}",
                r.stage,
                r.phase.tag(),
                r.sub_epoch,
                m.dis,
                m.f1
            );
        }
        write_text(
            &root
                .join("curves")
                .join(format!("{}.csv", row.mode.as_str())),
            &curve,
        )?;
        rows.push(row);
    }
    write_text(&root.join("comparison.csv"), &table)?;
    print!("{table}");
    Ok(rows)
}

pub struct ReportRow {
    pub run_id: String,
    pub mode: TrainMode,
    pub seed: u64,
    pub dataset: String,
    pub series: usize,
    pub acc: f64,
    pub f1: f64,
    pub auc: f64,
    pub dis: f64,
}

pub const SUMMARY_HEADER: &str = "run_id,mode,seed,dataset,series,acc,f1,auc,dis";

/// Merges finished runs into one table; returns the rows and any warnings.
pub fn report_cmd(
    dirs: &[PathBuf],
    out: Option<&Path>,
) -> anyhow::Result<(Vec<ReportRow>, Vec<String>)> {
    if dirs.is_empty() {
        bail!(CntsError::Validation(
            "report needs at least one run directory".into()
        ));
    }
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut protocols = BTreeSet::new();
    for dir in dirs {
        let manifest = RunManifest::load(dir)?;
        if manifest.status != RunStatus::Complete {
            bail!(CntsError::Validation(format!(
                "run {} did not complete ({:?})",
                dir.display(),
                manifest.status
            )));
        }
        manifest.check_artifacts(dir)?;
        let cfg: ExperimentConfig = serde_json::from_str(&read_text(&dir.join(run::CONFIG))?)?;
        if cfg.digest() != manifest.config_digest {
            warnings.push(format!(
                "{}: config.json does not match the manifest digest",
                dir.display()
            ));
        }
        let mut protocol = cfg.train.clone();
        protocol.seed = 0;
        protocols.insert(protocol.digest());
        let report = ReportFile::load(dir.join(run::REPORT))?;
        rows.push(ReportRow {
            run_id: manifest.run_id,
            mode: manifest.mode,
            seed: manifest.seed,
            dataset: report.aggregate.dataset.clone(),
            series: report.aggregate.series_count,
            acc: report.aggregate.acc,
            f1: report.aggregate.f1,
            auc: report.aggregate.auc,
            dis: report.series.iter().map(|r| r.dis).sum::<f64>() / report.series.len() as f64,
        });
    }
    if protocols.len() > 1 {
        warnings.push(format!(
            "runs use {} different training configurations (config digests differ beyond the seed)",
            protocols.len()
        ));
    }

    let mut csv = format!("{SUMMARY_HEADER}\n");
    let mut md = String::from("| run | mode | seed | dataset | series | acc | f1 | auc | dis |\n|---|---|---|---|---|---|---|---|---|\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.mode.as_str(),
            r.seed,
            r.dataset,
            r.series,
            r.acc,
            r.f1,
            r.auc,
            r.dis
        );
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            r.run_id,
            r.mode.as_str(),
            r.seed,
            r.dataset,
            r.series,
            r.acc,
            r.f1,
            r.auc,
            r.dis
        );
    }
    if rows.len() > 1 {
        let n = rows.len() as f64;
        let mean = |f: fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let _ = writeln!(
            md,
            "| mean | | | | | {:.4} | {:.4} | {:.4} | {:.4} |",
            mean(|r| r.acc),
            mean(|r| r.f1),
            mean(|r| r.auc),
            mean(|r| r.dis)
        );
    }
    if let Some(path) = out {
        write_text(path, &csv)?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!("{md}");
    Ok((rows, warnings))
}
