use serde::{Deserialize, Serialize};

use crate::error::{CntsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

/// A univariate series with optional per-point 0/1 anomaly labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    values: Vec<f64>,
    labels: Option<Vec<u8>>,
    role: Role,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        values: Vec<f64>,
        labels: Option<Vec<u8>>,
        role: Role,
    ) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CntsError::Validation(format!(
                "value at index {i} is not finite"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(CntsError::Validation(format!(
                    "{} labels for {} values",
                    labels.len(),
                    values.len()
                )));
            }
            if let Some(i) = labels.iter().position(|&l| l > 1) {
                return Err(CntsError::Validation(format!(
                    "label at index {i} is {}, expected 0 or 1",
                    labels[i]
                )));
            }
        }
        Ok(TimeSeries {
            name: name.into(),
            values,
            labels,
            role,
        })
    }

    pub fn unlabeled(name: impl Into<String>, values: Vec<f64>, role: Role) -> Result<Self> {
        Self::new(name, values, None, role)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Labels, or a validation error naming the series when absent.
    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels().ok_or_else(|| {
            CntsError::Validation(format!("series {:?} carries no labels", self.name))
        })
    }

    /// Same series with the labels dropped.
    pub fn without_labels(&self) -> TimeSeries {
        TimeSeries {
            labels: None,
            ..self.clone()
        }
    }

    pub fn with_role(mut self, role: Role) -> TimeSeries {
        self.role = role;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> TimeSeries {
        self.name = name.into();
        self
    }

    pub fn anomaly_rate(&self) -> Option<f64> {
        self.labels().map(|l| {
            if l.is_empty() {
                0.0
            } else {
                l.iter().map(|&v| v as f64).sum::<f64>() / l.len() as f64
            }
        })
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// Z-score statistics fitted on training values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    /// Population mean and standard deviation of `train`.
    pub fn fit(train: &TimeSeries) -> Result<Self> {
        let values = train.values();
        if values.len() < 2 {
            return Err(CntsError::Validation(
                "normalisation needs at least two training values".into(),
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 1e-12) {
            return Err(CntsError::Validation(format!(
                "series {:?} is constant, cannot normalise",
                train.name()
            )));
        }
        Ok(NormStats { mean, std })
    }

    pub fn normalize(&self, series: &TimeSeries) -> TimeSeries {
        let NormStats { mean, std } = *self;
        series.map_values(|v| (v - mean) / std)
    }

    pub fn denormalize(&self, series: &TimeSeries) -> TimeSeries {
        let NormStats { mean, std } = *self;
        series.map_values(|v| v * std + mean)
    }
}

pub fn fit_norm(train: &TimeSeries) -> Result<NormStats> {
    NormStats::fit(train)
}

pub fn normalize(series: &TimeSeries, stats: &NormStats) -> TimeSeries {
    stats.normalize(series)
}

/// Expands inclusive `(start, end)` index ranges into per-point labels.
pub fn labels_from_ranges(ranges: &[(usize, usize)], n: usize) -> Result<Vec<u8>> {
    let mut labels = vec![0u8; n];
    for &(start, end) in ranges {
        if start > end || end >= n {
            return Err(CntsError::Validation(format!(
                "range ({start}, {end}) is outside 0..{n}"
            )));
        }
        labels[start..=end].fill(1);
    }
    Ok(labels)
}

/// Maximal runs of 1s as inclusive ranges.
pub fn ranges_from_labels(labels: &[u8]) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().enumerate() {
        match (l == 1, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                ranges.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        ranges.push((s, labels.len() - 1));
    }
    ranges
}
