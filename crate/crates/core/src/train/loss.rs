//! The two cooperative objectives.
//!
//! Each loss returns a gradient only for its own network's output; the partner's
//! output enters as a constant.

use super::select::{select_top_fraction, SelectionMask};
use crate::error::{CntsError, Result};
use crate::numerics::{cross_entropy_with_grad, softmax, LossGrad};

fn same_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(CntsError::Shape(format!(
            "{what}: {} vs {} elements",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Detector objective with gradient with respect to `scores`.
///
/// The points with the largest reconstruction error are selected; over that set the
/// softmaxed errors are the target distribution and the scores are the logits.
pub fn detector_loss(
    recon_errors: &[f64],
    scores: &[f64],
    select_fraction: f64,
) -> Result<LossGrad> {
    same_len(recon_errors, scores, "detector loss")?;
    let mask = select_top_fraction(recon_errors, select_fraction)?;
    detector_loss_on(&mask, recon_errors, scores)
}

pub(crate) fn detector_loss_on(
    mask: &SelectionMask,
    recon_errors: &[f64],
    scores: &[f64],
) -> Result<LossGrad> {
    if mask.len() < 2 {
        return Err(CntsError::DegenerateSelection(format!(
            "detector selection holds {} element(s), need at least 2",
            mask.len()
        )));
    }
    let target = softmax(&mask.gather(recon_errors))?;
    let selected = cross_entropy_with_grad(&target, &mask.gather(scores))?;
    let mut grad = vec![0.0; scores.len()];
    for (&i, g) in mask.indices().iter().zip(selected.grad) {
        grad[i] = g;
    }
    Ok(LossGrad {
        loss: selected.loss,
        grad,
    })
}

/// Reconstructor objective with gradient with respect to `recon`.
///
/// Points with the highest anomaly scores are dropped; the loss is the mean squared
/// error over the rest. With `exclude_fraction == 0` this is the plain MSE.
pub fn reconstructor_loss(
    windows: &[f64],
    recon: &[f64],
    scores: &[f64],
    exclude_fraction: f64,
) -> Result<LossGrad> {
    same_len(windows, recon, "reconstructor loss")?;
    same_len(windows, scores, "reconstructor loss")?;
    if windows.is_empty() {
        return Err(CntsError::Shape(
            "reconstructor loss over an empty batch".into(),
        ));
    }
    if !(0.0..1.0).contains(&exclude_fraction) {
        return Err(CntsError::Config(format!(
            "exclude fraction {exclude_fraction} outside [0, 1)"
        )));
    }
    let keep: Vec<usize> = if exclude_fraction == 0.0 {
        (0..windows.len()).collect()
    } else {
        select_top_fraction(scores, exclude_fraction)?.complement()
    };
    if keep.is_empty() {
        return Err(CntsError::DegenerateSelection(
            "every point was excluded from the reconstruction loss".into(),
        ));
    }
    let n = keep.len() as f64;
    let mut sum = 0.0;
    for &i in &keep {
        let d = recon[i] - windows[i];
        sum += d * d;
    }
    let mut grad = vec![0.0; recon.len()];
    for &i in &keep {
        grad[i] = 2.0 * (recon[i] - windows[i]) / n;
    }
    Ok(LossGrad {
        loss: sum / n,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{entropy, mse_with_grad};

    #[test]
    fn matched_distributions_hit_the_entropy_floor() {
        let e = [3.0, 0.5, 2.0, 0.1, 1.0, 2.5];
        let out = detector_loss(&e, &e, 0.5).unwrap();
        let mask = select_top_fraction(&e, 0.5).unwrap();
        let p = softmax(&mask.gather(&e)).unwrap();
        assert!((out.loss - entropy(&p)).abs() < 1e-12);
        assert!(out.grad.iter().all(|g| g.abs() <= 1e-12));
    }

    #[test]
    fn uniform_prediction_example() {
        let out = detector_loss(&[10.0, 0.0, 0.0, 0.0], &[0.0; 4], 0.5).unwrap();
        // mask {0, 1}; target softmax([10, 0]), prediction uniform over two
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((out.loss - 0.6932).abs() < 1e-4);
        let t0 = 1.0 / (1.0 + (-10f64).exp());
        assert!((out.grad[0] - (0.5 - t0)).abs() < 1e-15);
        assert_eq!(out.grad[2], 0.0);
        assert_eq!(out.grad[3], 0.0);
    }

    #[test]
    fn tiny_selection_is_degenerate() {
        assert!(matches!(
            detector_loss(&[1.0, 2.0, 3.0], &[0.0; 3], 0.2),
            Err(CntsError::DegenerateSelection(_))
        ));
    }

    #[test]
    fn worst_point_dropped() {
        let out = reconstructor_loss(
            &[1.0, 1.0, 1.0, 1.0],
            &[1.0, 1.0, 1.0, 9.0],
            &[0.0, 0.0, 0.0, 99.0],
            0.25,
        )
        .unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.grad, vec![0.0; 4]);
    }

    #[test]
    fn dropped_points_get_zero_gradient() {
        let w = [0.5, -1.0, 2.0, 0.0, 1.5];
        let r = [1.0, 1.0, 1.0, 1.0, 1.0];
        let s = [0.1, 5.0, 0.2, 4.0, 0.3];
        let out = reconstructor_loss(&w, &r, &s, 0.4).unwrap();
        assert_eq!(out.grad[1], 0.0);
        assert_eq!(out.grad[3], 0.0);
        assert!(out.grad[0] != 0.0);
    }

    #[test]
    fn zero_exclusion_is_plain_mse_bitwise() {
        let w: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin()).collect();
        let r: Vec<f64> = (0..37).map(|i| (i as f64 * 0.3).cos()).collect();
        let s = vec![1.0; 37];
        let a = reconstructor_loss(&w, &r, &s, 0.0).unwrap();
        let b = mse_with_grad(&r, &w).unwrap();
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        assert_eq!(a.grad, b.grad);
    }
}
