//! Cooperative reconstructor/detector training for unsupervised anomaly detection
//! on univariate time series.
//!
//! A reconstructor `R` maps windows to reconstructed windows; a detector `D` maps
//! windows to per-point anomaly scores. Training alternates: `R` learns a masked
//! reconstruction loss that ignores the points `D` scores highest, then `D` learns
//! to match the softmaxed reconstruction errors of the points `R` reconstructs worst.
//! Evaluation thresholds the detector's scores point by point, with no
//! anomaly-adjustment post-processing.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod models;
pub mod numerics;
pub mod seed;
pub mod train;

pub use data::{NormStats, Role, TimeSeries, WindowBatch};
pub use error::{CheckpointError, CntsError, ErrorClass, Result};
pub use eval::{EvalReport, ReportFile};
pub use models::{Checkpoint, DetectorModel, ModelKind, NetShape, ReconstructorModel};
pub use numerics::{Activation, AdamConfig, DenseNet, Matrix};
pub use train::{TrainConfig, TrainHistory, TrainMode, TrainedModels};
