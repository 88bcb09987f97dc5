//! The two window networks and their persistence.
//!
//! Both map a length-`l` window to `l` outputs: the reconstructor emits the
//! reconstructed window, the detector one raw (logit-scale) anomaly score per
//! window position.

mod checkpoint;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, MAGIC};

use crate::data::WindowBatch;
use crate::error::{CheckpointError, CntsError, Result};
use crate::numerics::{Activation, DenseNet, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "R")]
    Reconstructor,
    #[serde(rename = "D")]
    Detector,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Reconstructor => "R",
            ModelKind::Detector => "D",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "R" => Some(ModelKind::Reconstructor),
            "D" => Some(ModelKind::Detector),
            _ => None,
        }
    }
}

/// Hidden layer widths and activation; the output layer is always identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetShape {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    /// Start the output layer at zero weights so the untrained network is constant.
    #[serde(default)]
    pub zero_output: bool,
}

impl NetShape {
    /// `[l, 4l, 2l, l]` with tanh hidden units.
    pub fn default_reconstructor(window: usize) -> Self {
        NetShape {
            hidden: vec![4 * window, 2 * window],
            hidden_activation: Activation::Tanh,
            zero_output: false,
        }
    }

    /// `[l, 4l, 2l, l]` with relu hidden units; the output layer starts at zero so an
    /// untrained detector scores every point alike.
    pub fn default_detector(window: usize) -> Self {
        NetShape {
            hidden: vec![4 * window, 2 * window],
            hidden_activation: Activation::Relu,
            zero_output: true,
        }
    }

    pub fn dims(&self, window: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(window);
        dims.extend_from_slice(&self.hidden);
        dims.push(window);
        dims
    }

    pub fn activations(&self) -> Vec<Activation> {
        let mut acts = vec![self.hidden_activation; self.hidden.len()];
        acts.push(Activation::Identity);
        acts
    }
}

fn check_window_net(net: &DenseNet) -> Result<usize> {
    let window = net.input_dim();
    if net.output_dim() != window {
        return Err(CntsError::Shape(format!(
            "window network maps {window} inputs to {} outputs",
            net.output_dim()
        )));
    }
    Ok(window)
}

fn run(net: &DenseNet, batch: &WindowBatch) -> Result<Matrix> {
    if batch.window_len() != net.input_dim() {
        return Err(CntsError::Shape(format!(
            "batch windows have length {}, model expects {}",
            batch.window_len(),
            net.input_dim()
        )));
    }
    net.predict(batch.windows())
}

macro_rules! window_model {
    ($name:ident, $kind:expr) => {
        impl $name {
            pub fn new(window: usize, shape: &NetShape, seed: u64) -> Result<Self> {
                let mut net = DenseNet::init(&shape.dims(window), &shape.activations(), seed)?;
                if shape.zero_output {
                    if let Some(last) = net.layers_mut().last_mut() {
                        last.weights.iter_mut().for_each(|w| *w = 0.0);
                    }
                }
                Ok($name { net })
            }

            pub fn from_net(net: DenseNet) -> Result<Self> {
                check_window_net(&net)?;
                Ok($name { net })
            }

            pub fn net(&self) -> &DenseNet {
                &self.net
            }

            pub(crate) fn net_mut(&mut self) -> &mut DenseNet {
                &mut self.net
            }

            pub fn window(&self) -> usize {
                self.net.input_dim()
            }

            pub fn kind(&self) -> ModelKind {
                $kind
            }

            pub fn digest(&self) -> String {
                self.net.digest()
            }

            pub fn to_checkpoint(&self, config_digest: &str) -> Checkpoint {
                Checkpoint {
                    kind: $kind,
                    window: self.window(),
                    net: self.net.clone(),
                    config_digest: config_digest.to_string(),
                }
            }

            pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
                if ckpt.kind != $kind {
                    return Err(CheckpointError::KindMismatch {
                        expected: $kind.tag().into(),
                        found: ckpt.kind.tag().into(),
                    }
                    .into());
                }
                Self::from_net(ckpt.net)
            }

            pub fn save_checkpoint(
                &self,
                path: impl AsRef<Path>,
                config_digest: &str,
            ) -> Result<()> {
                self.to_checkpoint(config_digest).save(path)
            }

            pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
                Self::from_checkpoint(Checkpoint::load(path)?)
            }
        }
    };
}

/// Window → reconstructed window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructorModel {
    net: DenseNet,
}

/// Window → per-position raw anomaly scores.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    net: DenseNet,
}

window_model!(ReconstructorModel, ModelKind::Reconstructor);
window_model!(DetectorModel, ModelKind::Detector);

impl ReconstructorModel {
    /// Reconstructed windows, `[n x l]`.
    pub fn reconstruct(&self, batch: &WindowBatch) -> Result<Matrix> {
        run(&self.net, batch)
    }
}

impl DetectorModel {
    /// Raw anomaly scores, `[n x l]`.
    pub fn detect(&self, batch: &WindowBatch) -> Result<Matrix> {
        run(&self.net, batch)
    }
}
