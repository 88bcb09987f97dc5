//! Selection masks, the cooperative losses and the alternating training schedule.

mod config;
mod history;
mod loss;
mod select;
mod trainer;

pub use config::TrainConfig;
pub use history::{HistoryRecord, MonitorMetrics, Phase, TrainHistory, HISTORY_HEADER};
pub use loss::{detector_loss, reconstructor_loss};
pub use select::{select_top_fraction, top_count, SelectionMask};
pub use trainer::{
    train, train_baseline_detector, train_baseline_reconstructor, train_cnts, train_detector_epoch,
    train_plain_reconstructor_epoch, train_reconstructor_epoch, EpochStats, TrainMode,
    TrainedModels,
};
