use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{auc, best_f1_threshold, dis, mse_split};
use super::scores::{point_recon_errors, point_scores, PointScores};
use crate::data::TimeSeries;
use crate::error::{CntsError, Result};
use crate::models::{DetectorModel, ReconstructorModel};

/// Detection and reconstruction metrics for one labeled series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub series: String,
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub mse_n: f64,
    pub mse_a: f64,
    pub dis: f64,
}

/// Arithmetic means of the headline metrics over the series of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetAggregate {
    pub dataset: String,
    pub series_count: usize,
    pub acc: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub series: Vec<EvalReport>,
    pub aggregate: DatasetAggregate,
}

impl ReportFile {
    pub fn new(dataset: &str, series: Vec<EvalReport>) -> Result<Self> {
        let aggregate = aggregate(dataset, &series)?;
        Ok(ReportFile { series, aggregate })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CntsError::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| CntsError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CntsError::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn aggregate(dataset: &str, reports: &[EvalReport]) -> Result<DatasetAggregate> {
    if reports.is_empty() {
        return Err(CntsError::Validation(
            "no series reports to aggregate".into(),
        ));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(DatasetAggregate {
        dataset: dataset.to_string(),
        series_count: reports.len(),
        acc: mean(|r| r.acc),
        f1: mean(|r| r.f1),
        auc: mean(|r| r.auc),
    })
}

/// Where the anomaly scores come from.
#[derive(Debug, Clone, Copy)]
pub enum ScoreSource<'a> {
    Detector(&'a DetectorModel),
    /// Reconstruction error used directly as the score (single-reconstructor baseline).
    ReconstructionError,
}

/// Evaluates a labeled, already-normalised series.
pub fn evaluate(
    detector: &DetectorModel,
    reconstructor: &ReconstructorModel,
    test: &TimeSeries,
    stride: usize,
) -> Result<EvalReport> {
    evaluate_with(ScoreSource::Detector(detector), reconstructor, test, stride)
}

pub fn evaluate_with(
    source: ScoreSource<'_>,
    reconstructor: &ReconstructorModel,
    test: &TimeSeries,
    stride: usize,
) -> Result<EvalReport> {
    let labels = test.require_labels()?;
    let errors = point_recon_errors(reconstructor, test, stride)?;
    let scores = match source {
        ScoreSource::Detector(d) => point_scores(d, test, stride)?,
        ScoreSource::ReconstructionError => errors.clone(),
    };
    report_from_scores(test.name(), &scores, &errors, labels)
}

pub fn report_from_scores(
    name: &str,
    scores: &PointScores,
    errors: &PointScores,
    labels: &[u8],
) -> Result<EvalReport> {
    let best = best_f1_threshold(&scores.scores, labels)?;
    let area = auc(&scores.scores, labels)?;
    let (mse_n, mse_a) = mse_split(&errors.scores, labels)?;
    let c = best.confusion;
    Ok(EvalReport {
        series: name.to_string(),
        acc: c.acc,
        precision: c.precision,
        recall: c.recall,
        f1: c.f1,
        auc: area,
        threshold: best.threshold,
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        tn: c.tn,
        mse_n,
        mse_a,
        dis: dis(mse_n, mse_a)?,
    })
}
