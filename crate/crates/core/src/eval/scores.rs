use crate::data::{make_windows, TimeSeries, WindowBatch};
use crate::error::{CntsError, Result};
use crate::models::{DetectorModel, ReconstructorModel};
use crate::numerics::{elementwise_sq_err, Matrix};

/// Per-point values aggregated over all covering windows.
#[derive(Debug, Clone, PartialEq)]
pub struct PointScores {
    pub scores: Vec<f64>,
    pub coverage: Vec<usize>,
}

const CHUNK: usize = 1024;

/// Mean of a per-window-position quantity over every window covering each point.
pub fn aggregate_windows<F>(
    values: &[f64],
    window: usize,
    stride: usize,
    per_window: F,
) -> Result<PointScores>
where
    F: Fn(&WindowBatch) -> Result<Matrix>,
{
    if values.len() < window {
        return Err(CntsError::Validation(format!(
            "series of length {} is shorter than the window {window}",
            values.len()
        )));
    }
    let all = make_windows(values, window, stride)?;
    let mut sums = vec![0.0; values.len()];
    let mut coverage = vec![0usize; values.len()];
    let rows: Vec<usize> = (0..all.len()).collect();
    for chunk in rows.chunks(CHUNK) {
        let batch = all.select(chunk);
        let out = per_window(&batch)?;
        for (row, &origin) in out.iter_rows().zip(batch.origins()) {
            for (j, &v) in row.iter().enumerate() {
                sums[origin + j] += v;
                coverage[origin + j] += 1;
            }
        }
    }
    let scores: Vec<f64> = sums
        .iter()
        .zip(&coverage)
        .map(|(s, &c)| s / c as f64)
        .collect();
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CntsError::Numeric(
            "aggregated scores are not finite".into(),
        ));
    }
    Ok(PointScores { scores, coverage })
}

/// Detector scores per point, averaged over covering windows.
pub fn point_scores(
    detector: &DetectorModel,
    series: &TimeSeries,
    stride: usize,
) -> Result<PointScores> {
    aggregate_windows(series.values(), detector.window(), stride, |b| {
        detector.detect(b)
    })
}

/// Squared reconstruction error per point, averaged over covering windows.
pub fn point_recon_errors(
    reconstructor: &ReconstructorModel,
    series: &TimeSeries,
    stride: usize,
) -> Result<PointScores> {
    aggregate_windows(series.values(), reconstructor.window(), stride, |b| {
        let recon = reconstructor.reconstruct(b)?;
        let err = elementwise_sq_err(b.windows().as_slice(), recon.as_slice())?;
        Matrix::from_vec(recon.rows(), recon.cols(), err)
    })
}
