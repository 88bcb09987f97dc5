//! Scoring of trained models on labeled series.

mod metrics;
mod report;
mod scores;

pub use metrics::{
    apply_threshold, auc, best_f1_threshold, confusion_metrics, dis, mse_split, sentinel_below,
    BestThreshold, Confusion,
};
pub use report::{
    aggregate, evaluate, evaluate_with, report_from_scores, DatasetAggregate, EvalReport,
    ReportFile, ScoreSource,
};
pub use scores::{aggregate_windows, point_recon_errors, point_scores, PointScores};
