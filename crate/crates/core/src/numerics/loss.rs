//! Vector losses and the softmax family.

use crate::error::{CntsError, Result};

/// A scalar loss together with its gradient with respect to one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CntsError::Numeric(format!(
            "{what} holds a non-finite value at index {i}"
        )));
    }
    Ok(())
}

fn ensure_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(CntsError::Shape(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(CntsError::Shape("softmax of an empty vector".into()));
    }
    ensure_finite(values, "softmax input")?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `log(softmax(values))` via the log-sum-exp shift.
pub fn log_softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(CntsError::Shape("log-softmax of an empty vector".into()));
    }
    ensure_finite(values, "log-softmax input")?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    Ok(values.iter().map(|&v| v - lse).collect())
}

/// `(a_i - b_i)^2` per element.
pub fn elementwise_sq_err(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    ensure_same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect())
}

/// Mean squared error.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure_same_len(a, b)?;
    if a.is_empty() {
        return Err(CntsError::Shape("mse of empty vectors".into()));
    }
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    Ok(sum / a.len() as f64)
}

/// MSE of `prediction` against `target` with the gradient `2 (prediction - target) / n`.
pub fn mse_with_grad(prediction: &[f64], target: &[f64]) -> Result<LossGrad> {
    let loss = mse(prediction, target)?;
    let n = prediction.len() as f64;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Ok(LossGrad { loss, grad })
}

fn check_distribution(target: &[f64]) -> Result<()> {
    ensure_finite(target, "target distribution")?;
    if target.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(CntsError::Validation(
            "target probabilities must lie in [0, 1]".into(),
        ));
    }
    let sum: f64 = target.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(CntsError::Validation(format!(
            "target probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// `-sum_i target_i * log_softmax(logits)_i`.
pub fn cross_entropy(target: &[f64], logits: &[f64]) -> Result<f64> {
    ensure_same_len(target, logits)?;
    check_distribution(target)?;
    let log_probs = log_softmax(logits)?;
    Ok(-target
        .iter()
        .zip(&log_probs)
        .map(|(t, lp)| if *t == 0.0 { 0.0 } else { t * lp })
        .sum::<f64>())
}

/// Cross-entropy and its gradient with respect to the logits, `softmax(logits) - target`.
pub fn cross_entropy_with_grad(target: &[f64], logits: &[f64]) -> Result<LossGrad> {
    let loss = cross_entropy(target, logits)?;
    let probs = softmax(logits)?;
    let grad = probs.iter().zip(target).map(|(p, t)| p - t).collect();
    Ok(LossGrad { loss, grad })
}

/// Shannon entropy in nats; `0 ln 0` is taken as 0.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}
