//! Point-wise detection metrics without any anomaly-adjustment post-processing.

use serde::{Deserialize, Serialize};

use crate::error::{CntsError, Result};

/// `1` where `score > threshold`, strictly.
pub fn apply_threshold(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > threshold)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub acc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Confusion {
    /// Metrics from counts; undefined precision, recall or F1 are reported as 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let total = tp + fp + fn_ + tn;
        let acc = if total == 0 {
            0.0
        } else {
            (tp + tn) as f64 / total as f64
        };
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Confusion {
            tp,
            fp,
            fn_,
            tn,
            acc,
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_binary(v: &[u8], what: &str) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(CntsError::Validation(format!("{what} must be 0 or 1")));
    }
    Ok(())
}

pub fn confusion_metrics(labels: &[u8], preds: &[u8]) -> Result<Confusion> {
    if labels.len() != preds.len() {
        return Err(CntsError::Shape(format!(
            "{} labels vs {} predictions",
            labels.len(),
            preds.len()
        )));
    }
    check_binary(labels, "labels")?;
    check_binary(preds, "predictions")?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&y, &p) in labels.iter().zip(preds) {
        match (y, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => tn += 1,
        }
    }
    Ok(Confusion::from_counts(tp, fp, fn_, tn))
}

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(CntsError::Shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    check_binary(labels, "labels")?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CntsError::Numeric("scores must be finite".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(CntsError::Validation(
            "labels must contain both normal and anomalous points".into(),
        ));
    }
    Ok((pos, neg))
}

/// Threshold candidate strictly below every score.
pub fn sentinel_below(min: f64) -> f64 {
    let s = min - min.abs().max(1.0);
    if s.is_finite() {
        s
    } else {
        f64::MIN
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestThreshold {
    pub threshold: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// F1-maximising threshold over the observed unique scores plus a sentinel below the
/// minimum; ties go to the smaller threshold.
pub fn best_f1_threshold(scores: &[f64], labels: &[u8]) -> Result<BestThreshold> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // Walk unique values from the top; before visiting group k, everything above it
    // is predicted positive, which is exactly the "score > value_k" rule.
    let mut best: Option<BestThreshold> = None;
    let consider = |threshold: f64, tp: u64, fp: u64, best: &mut Option<BestThreshold>| {
        let c = Confusion::from_counts(tp, fp, pos - tp, neg - fp);
        let better = match best {
            None => true,
            Some(b) => c.f1 > b.f1 || (c.f1 == b.f1 && threshold < b.threshold),
        };
        if better {
            *best = Some(BestThreshold {
                threshold,
                f1: c.f1,
                confusion: c,
            });
        }
    };
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        consider(value, tp, fp, &mut best);
        while i < order.len() && scores[order[i]] == value {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    let min = scores[*order.last().expect("non-empty")];
    consider(sentinel_below(min), tp, fp, &mut best);
    Ok(best.expect("at least one candidate"))
}

/// ROC AUC as the normalised Mann-Whitney statistic, ties counted as one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let group_pos = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += avg_rank * group_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean error over normal points and over anomalous points.
pub fn mse_split(errors: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    if errors.len() != labels.len() {
        return Err(CntsError::Shape(format!(
            "{} errors vs {} labels",
            errors.len(),
            labels.len()
        )));
    }
    check_binary(labels, "labels")?;
    let (mut sum_n, mut cnt_n, mut sum_a, mut cnt_a) = (0.0, 0u64, 0.0, 0u64);
    for (&e, &y) in errors.iter().zip(labels) {
        if y == 1 {
            sum_a += e;
            cnt_a += 1;
        } else {
            sum_n += e;
            cnt_n += 1;
        }
    }
    if cnt_n == 0 || cnt_a == 0 {
        return Err(CntsError::Validation(
            "error split needs both normal and anomalous points".into(),
        ));
    }
    Ok((sum_n / cnt_n as f64, sum_a / cnt_a as f64))
}

/// Relative separation `(mse_a - mse_n) / mse_n`.
pub fn dis(mse_n: f64, mse_a: f64) -> Result<f64> {
    if !(mse_n > 0.0) {
        return Err(CntsError::Validation(format!(
            "normal-point error must be positive, got {mse_n}"
        )));
    }
    Ok((mse_a - mse_n) / mse_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_strict() {
        assert_eq!(apply_threshold(&[0.1, 0.5], 0.1), vec![0, 1]);
        assert_eq!(apply_threshold(&[0.1, 0.5, 0.3], 0.5), vec![0, 0, 0]);
        assert_eq!(apply_threshold(&[0.1, 0.5], -1e300), vec![1, 1]);
    }

    #[test]
    fn confusion_examples() {
        let c = confusion_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((c.acc, c.f1), (1.0, 1.0));
        let c = confusion_metrics(&[1, 0, 1, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (1, 0, 1, 2));
        assert_eq!((c.precision, c.recall, c.acc), (1.0, 0.5, 0.75));
        assert!((c.f1 - 2.0 / 3.0).abs() < 1e-15);
        let c = confusion_metrics(&[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        assert!(confusion_metrics(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn best_threshold_example() {
        let b = best_f1_threshold(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(b.threshold, 0.1);
        assert!((b.f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn separable_scores_reach_one() {
        let b = best_f1_threshold(&[0.0, 0.1, 0.9, 1.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(b.f1, 1.0);
        assert_eq!(b.threshold, 0.1);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(
            best_f1_threshold(&[0.1, 0.2], &[0, 0]),
            Err(CntsError::Validation(_))
        ));
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(CntsError::Validation(_))
        ));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[1, 0, 1, 0, 0, 0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.2, 0.8, 0.6, 0.4], &[0, 1, 0, 1]).unwrap(), 0.75);
    }

    #[test]
    fn split_and_dis() {
        assert_eq!(mse_split(&[1.0, 3.0], &[0, 1]).unwrap(), (1.0, 3.0));
        let (n, a) = mse_split(&[2.0, 2.0, 2.0], &[0, 1, 0]).unwrap();
        assert_eq!(n, a);
        assert!(mse_split(&[1.0, 3.0], &[0, 0]).is_err());
        assert_eq!(dis(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(dis(1.0, 2.0).unwrap(), 1.0);
        assert!(matches!(dis(0.0, 2.0), Err(CntsError::Validation(_))));
    }
}
