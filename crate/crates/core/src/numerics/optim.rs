use serde::{Deserialize, Serialize};

use super::dense::{DenseNet, Gradients};
use crate::error::{CntsError, Result};

/// Adaptive-moment (Adam) hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CntsError::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(CntsError::Config("moment decays must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CntsError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Moment accumulators for one network; shapes mirror the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        AdamState {
            config,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one bias-corrected Adam update in place.
    ///
    /// Gradients are checked before anything is touched, so a rejected step leaves both
    /// the network and the state unchanged.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        if grads.weights.len() != net.layers().len() || grads.biases.len() != net.layers().len() {
            return Err(CntsError::Shape(format!(
                "gradients cover {} layers, network has {}",
                grads.weights.len(),
                net.layers().len()
            )));
        }
        for (k, layer) in net.layers().iter().enumerate() {
            if grads.weights[k].len() != layer.weights.len()
                || grads.biases[k].len() != layer.bias.len()
            {
                return Err(CntsError::Shape(format!(
                    "gradient shape mismatch in layer {k}"
                )));
            }
            if grads.weights[k]
                .iter()
                .chain(&grads.biases[k])
                .any(|g| !g.is_finite())
            {
                return Err(CntsError::NonFiniteGradient { layer: k });
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        };
        for (k, layer) in net.layers_mut().iter_mut().enumerate() {
            update(
                &mut layer.weights,
                &grads.weights[k],
                &mut self.first.weights[k],
                &mut self.second.weights[k],
            );
            update(
                &mut layer.bias,
                &grads.biases[k],
                &mut self.first.biases[k],
                &mut self.second.biases[k],
            );
            if layer
                .weights
                .iter()
                .chain(&layer.bias)
                .any(|p| !p.is_finite())
            {
                return Err(CntsError::Numeric(format!(
                    "parameters of layer {k} became non-finite"
                )));
            }
        }
        Ok(())
    }
}
