//! Central finite-difference oracles for analytic gradients.

use super::dense::DenseNet;
use super::matrix::Matrix;
use crate::error::{CntsError, Result};

/// `|a - b| / max(|a|, |b|, 1e-8)` maximised over all entries.
pub fn max_relative_deviation(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CntsError::Numeric(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    Ok(())
}

fn finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(CntsError::Numeric(
            "loss evaluated to a non-finite value".into(),
        ))
    }
}

/// Central-difference gradient of a scalar function of a vector.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_eps(eps)?;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = finite(f(&probe)?)?;
        probe[i] = orig - eps;
        let minus = finite(f(&probe)?)?;
        probe[i] = orig;
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// Compares [`DenseNet::backward`] against central differences over every parameter.
///
/// `loss_fn` maps the network output to a scalar loss and its gradient with respect to
/// that output. Returns the maximum relative deviation.
pub fn grad_check<F>(net: &DenseNet, input: &Matrix, loss_fn: F, eps: f64) -> Result<f64>
where
    F: Fn(&Matrix) -> Result<(f64, Matrix)>,
{
    check_eps(eps)?;
    let trace = net.forward(input)?;
    let (loss, output_grad) = loss_fn(trace.output())?;
    finite(loss)?;
    let analytic = net.backward(&trace, &output_grad)?.flatten();

    let dims = net.dims();
    let activations = net.activations();
    let flat = net.flatten();
    let numeric = finite_difference_gradient(
        |params| {
            let probe = DenseNet::from_flat(&dims, &activations, params)?;
            Ok(loss_fn(&probe.predict(input)?)?.0)
        },
        &flat,
        eps,
    )?;
    Ok(max_relative_deviation(&analytic, &numeric))
}
