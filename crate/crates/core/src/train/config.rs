use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CntsError, Result};
use crate::models::NetShape;
use crate::numerics::{hex, AdamConfig};

/// Hyperparameters of the alternating schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Outer rounds; each runs `r_epochs` reconstructor passes then `d_epochs` detector passes.
    pub epochs: usize,
    pub r_epochs: usize,
    pub d_epochs: usize,
    pub window: usize,
    /// Training window stride; `None` means half the window.
    pub train_stride: Option<usize>,
    pub batch_size: usize,
    /// Fraction of points (largest reconstruction error) the detector learns from.
    pub detector_select_fraction: f64,
    /// Fraction of points (highest anomaly score) left out of the reconstructor loss.
    pub reconstructor_exclude_fraction: f64,
    pub optimizer: AdamConfig,
    pub seed: u64,
    pub normalize: bool,
    pub shuffle: bool,
    /// Stride used when monitoring against a labeled series.
    pub eval_stride: usize,
    pub reconstructor: Option<NetShape>,
    pub detector: Option<NetShape>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            r_epochs: 3,
            d_epochs: 3,
            window: 64,
            train_stride: None,
            batch_size: 128,
            detector_select_fraction: 0.20,
            reconstructor_exclude_fraction: 0.10,
            optimizer: AdamConfig::default(),
            seed: 0,
            normalize: true,
            shuffle: true,
            eval_stride: 1,
            reconstructor: None,
            detector: None,
        }
    }
}

impl TrainConfig {
    /// Schedule used for the synthetic benchmark: every window each pass, small
    /// batches, one reconstructor pass and twelve detector passes per stage.
    pub fn synthetic_benchmark() -> Self {
        TrainConfig {
            r_epochs: 1,
            d_epochs: 12,
            train_stride: Some(1),
            batch_size: 32,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(CntsError::Config(m.to_string()));
        if self.epochs == 0 {
            return err("epochs must be at least 1");
        }
        if self.window == 0 {
            return err("window length must be at least 1");
        }
        if self.train_stride == Some(0) || self.eval_stride == 0 {
            return err("strides must be at least 1");
        }
        if self.batch_size == 0 {
            return err("batch size must be at least 1");
        }
        if !(self.detector_select_fraction > 0.0 && self.detector_select_fraction <= 1.0) {
            return err("detector_select_fraction must lie in (0, 1]");
        }
        if !(self.reconstructor_exclude_fraction >= 0.0
            && self.reconstructor_exclude_fraction < 1.0)
        {
            return err("reconstructor_exclude_fraction must lie in [0, 1)");
        }
        for shape in [&self.reconstructor, &self.detector].into_iter().flatten() {
            if shape.hidden.contains(&0) {
                return err("hidden widths must be positive");
            }
        }
        self.optimizer.validate()
    }

    pub fn train_stride(&self) -> usize {
        self.train_stride.unwrap_or((self.window / 2).max(1))
    }

    pub fn reconstructor_shape(&self) -> NetShape {
        self.reconstructor
            .clone()
            .unwrap_or_else(|| NetShape::default_reconstructor(self.window))
    }

    pub fn detector_shape(&self) -> NetShape {
        self.detector
            .clone()
            .unwrap_or_else(|| NetShape::default_detector(self.window))
    }

    /// Number of history records the schedule produces.
    pub fn history_len(&self) -> usize {
        self.epochs * (self.r_epochs + self.d_epochs)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config is always serialisable");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.train_stride(), 32);
        assert_eq!(cfg.history_len(), 30);
    }

    #[test]
    fn rejects_out_of_range_fractions() {
        for (sel, exc) in [(0.0, 0.1), (1.5, 0.1), (0.2, 1.0), (0.2, -0.1)] {
            let cfg = TrainConfig {
                detector_select_fraction: sel,
                reconstructor_exclude_fraction: exc,
                ..TrainConfig::default()
            };
            assert!(cfg.validate().is_err(), "{sel} {exc}");
        }
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = TrainConfig::default();
        let b = TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        };
        assert_eq!(a.digest(), TrainConfig::default().digest());
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"epochs": 2, "window": 16}"#).unwrap();
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.r_epochs, 3);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"epoch": 2}"#).is_err());
    }
}
