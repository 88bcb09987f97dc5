use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::history::{HistoryRecord, MonitorMetrics, Phase, TrainHistory};
use super::loss::{detector_loss, reconstructor_loss};
use crate::data::{fit_norm, make_windows, NormStats, TimeSeries, WindowBatch};
use crate::error::{CntsError, Result};
use crate::eval::{
    best_f1_threshold, dis, evaluate_with, mse_split, point_recon_errors, point_scores, EvalReport,
    ScoreSource,
};
use crate::models::{DetectorModel, ReconstructorModel};
use crate::numerics::{elementwise_sq_err, mse_with_grad, AdamState, LossGrad, Matrix};
use crate::seed::derive_seed;

const STREAM_R_INIT: u64 = 1;
const STREAM_D_INIT: u64 = 2;
const STREAM_R_ORDER: u64 = 10;
const STREAM_D_ORDER: u64 = 11;

/// Which schedule produced a pair of models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Alternating cooperative training.
    Cnts,
    /// Single reconstructor trained on plain MSE; its error is the anomaly score.
    BaselineR,
    /// Detector trained against a frozen plain-MSE reconstructor.
    BaselineDetection,
}

impl TrainMode {
    pub const ALL: [TrainMode; 3] = [
        TrainMode::Cnts,
        TrainMode::BaselineR,
        TrainMode::BaselineDetection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Cnts => "cnts",
            TrainMode::BaselineR => "baseline_r",
            TrainMode::BaselineDetection => "baseline_detection",
        }
    }
}

impl std::str::FromStr for TrainMode {
    type Err = CntsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnts" => Ok(TrainMode::Cnts),
            "baseline_r" => Ok(TrainMode::BaselineR),
            "baseline_detection" => Ok(TrainMode::BaselineDetection),
            other => Err(CntsError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub last_loss: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub mode: TrainMode,
    pub reconstructor: ReconstructorModel,
    pub detector: Option<DetectorModel>,
    pub history: TrainHistory,
    pub norm: Option<NormStats>,
}

impl TrainedModels {
    /// Applies the training normalisation to a raw series.
    pub fn prepare(&self, series: &TimeSeries) -> TimeSeries {
        match &self.norm {
            Some(stats) => stats.normalize(series),
            None => series.clone(),
        }
    }

    pub fn score_source(&self) -> ScoreSource<'_> {
        match &self.detector {
            Some(d) if self.mode != TrainMode::BaselineR => ScoreSource::Detector(d),
            _ => ScoreSource::ReconstructionError,
        }
    }

    /// Evaluates a raw labeled series.
    pub fn evaluate(&self, test: &TimeSeries, stride: usize) -> Result<EvalReport> {
        evaluate_with(
            self.score_source(),
            &self.reconstructor,
            &self.prepare(test),
            stride,
        )
    }
}

struct Prepared {
    windows: WindowBatch,
    norm: Option<NormStats>,
    monitor: Option<TimeSeries>,
}

fn prepare(
    train: &TimeSeries,
    cfg: &TrainConfig,
    monitor: Option<&TimeSeries>,
) -> Result<Prepared> {
    cfg.validate()?;
    if train.labels().is_some() {
        return Err(CntsError::Validation(format!(
            "training series {:?} carries labels; training is unsupervised",
            train.name()
        )));
    }
    if train.len() < cfg.window {
        return Err(CntsError::Validation(format!(
            "training series has {} points, window is {}",
            train.len(),
            cfg.window
        )));
    }
    let norm = if cfg.normalize {
        Some(fit_norm(train)?)
    } else {
        None
    };
    let apply = |s: &TimeSeries| match &norm {
        Some(stats) => stats.normalize(s),
        None => s.clone(),
    };
    let windows = make_windows(apply(train).values(), cfg.window, cfg.train_stride())?;
    let monitor = match monitor {
        Some(m) => {
            let labels = m.require_labels()?;
            let pos = labels.iter().filter(|&&l| l == 1).count();
            if pos == 0 || pos == labels.len() {
                return Err(CntsError::Validation(
                    "monitor series needs both normal and anomalous points".into(),
                ));
            }
            if m.len() < cfg.window {
                return Err(CntsError::Validation(
                    "monitor series shorter than the window".into(),
                ));
            }
            Some(apply(m))
        }
        None => None,
    };
    Ok(Prepared {
        windows,
        norm,
        monitor,
    })
}

fn shuffled_batches(
    windows: &WindowBatch,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<WindowBatch> {
    let mut order: Vec<usize> = (0..windows.len()).collect();
    if cfg.shuffle {
        order.shuffle(rng);
    }
    windows.batches(&order, cfg.batch_size)
}

fn accumulate(stats: &[f64]) -> EpochStats {
    let steps = stats.len();
    let mean_loss = if steps == 0 {
        f64::NAN
    } else {
        stats.iter().sum::<f64>() / steps as f64
    };
    EpochStats {
        mean_loss,
        last_loss: stats.last().copied().unwrap_or(f64::NAN),
        steps,
    }
}

fn grad_matrix(like: &Matrix, lg: LossGrad) -> Result<Matrix> {
    Matrix::from_vec(like.rows(), like.cols(), lg.grad)
}

/// One pass of reconstructor updates; the detector is only read.
pub fn train_reconstructor_epoch(
    reconstructor: &mut ReconstructorModel,
    detector: &DetectorModel,
    batches: &[WindowBatch],
    optimizer: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<EpochStats> {
    let mut losses = Vec::with_capacity(batches.len());
    for (bi, batch) in batches.iter().enumerate() {
        let mut step = || -> Result<f64> {
            let trace = reconstructor.net().forward(batch.windows())?;
            let scores = detector.detect(batch)?;
            let lg = reconstructor_loss(
                batch.windows().as_slice(),
                trace.output().as_slice(),
                scores.as_slice(),
                cfg.reconstructor_exclude_fraction,
            )?;
            let loss = lg.loss;
            let grads = reconstructor
                .net()
                .backward(&trace, &grad_matrix(trace.output(), lg)?)?;
            optimizer.step(reconstructor.net_mut(), &grads)?;
            Ok(loss)
        };
        losses.push(step().map_err(|e| e.context(format!("reconstructor batch {bi}")))?);
    }
    Ok(accumulate(&losses))
}

/// One pass of plain-MSE reconstructor updates with no detector involved.
pub fn train_plain_reconstructor_epoch(
    reconstructor: &mut ReconstructorModel,
    batches: &[WindowBatch],
    optimizer: &mut AdamState,
) -> Result<EpochStats> {
    let mut losses = Vec::with_capacity(batches.len());
    for (bi, batch) in batches.iter().enumerate() {
        let mut step = || -> Result<f64> {
            let trace = reconstructor.net().forward(batch.windows())?;
            let lg = mse_with_grad(trace.output().as_slice(), batch.windows().as_slice())?;
            let loss = lg.loss;
            let grads = reconstructor
                .net()
                .backward(&trace, &grad_matrix(trace.output(), lg)?)?;
            optimizer.step(reconstructor.net_mut(), &grads)?;
            Ok(loss)
        };
        losses.push(step().map_err(|e| e.context(format!("reconstructor batch {bi}")))?);
    }
    Ok(accumulate(&losses))
}

/// One pass of detector updates; the reconstructor is only read.
pub fn train_detector_epoch(
    detector: &mut DetectorModel,
    reconstructor: &ReconstructorModel,
    batches: &[WindowBatch],
    optimizer: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<EpochStats> {
    let mut losses = Vec::with_capacity(batches.len());
    for (bi, batch) in batches.iter().enumerate() {
        let mut step = || -> Result<f64> {
            let recon = reconstructor.reconstruct(batch)?;
            let errors = elementwise_sq_err(batch.windows().as_slice(), recon.as_slice())?;
            let trace = detector.net().forward(batch.windows())?;
            let lg = detector_loss(
                &errors,
                trace.output().as_slice(),
                cfg.detector_select_fraction,
            )?;
            let loss = lg.loss;
            let grads = detector
                .net()
                .backward(&trace, &grad_matrix(trace.output(), lg)?)?;
            optimizer.step(detector.net_mut(), &grads)?;
            Ok(loss)
        };
        losses.push(step().map_err(|e| e.context(format!("detector batch {bi}")))?);
    }
    Ok(accumulate(&losses))
}

fn monitor_metrics(
    reconstructor: &ReconstructorModel,
    detector: Option<&DetectorModel>,
    series: &TimeSeries,
    stride: usize,
) -> Result<MonitorMetrics> {
    let labels = series.require_labels()?;
    let errors = point_recon_errors(reconstructor, series, stride)?;
    let (mse_n, mse_a) = mse_split(&errors.scores, labels)?;
    let f1 = match detector {
        Some(d) => best_f1_threshold(&point_scores(d, series, stride)?.scores, labels)?.f1,
        None => best_f1_threshold(&errors.scores, labels)?.f1,
    };
    Ok(MonitorMetrics {
        mse_n,
        mse_a,
        dis: dis(mse_n, mse_a)?,
        f1,
    })
}

struct Recorder<'a> {
    history: TrainHistory,
    monitor: Option<&'a TimeSeries>,
    stride: usize,
}

impl Recorder<'_> {
    fn push(
        &mut self,
        stage: usize,
        phase: Phase,
        sub_epoch: usize,
        stats: EpochStats,
        reconstructor: &ReconstructorModel,
        detector: Option<&DetectorModel>,
    ) -> Result<()> {
        let monitor = match self.monitor {
            Some(series) => Some(monitor_metrics(
                reconstructor,
                detector,
                series,
                self.stride,
            )?),
            None => None,
        };
        let loss = (stats.steps > 0).then_some(stats.mean_loss);
        self.history.records.push(HistoryRecord {
            stage,
            phase,
            sub_epoch,
            loss_r: if phase == Phase::Reconstructor {
                loss
            } else {
                None
            },
            loss_d: if phase == Phase::Detector { loss } else { None },
            monitor,
        });
        Ok(())
    }
}

fn stage_context(stage: usize, phase: Phase, sub: usize) -> impl FnOnce(CntsError) -> CntsError {
    move |e| e.context(format!("stage {stage}, {} pass {sub}", phase.tag()))
}

/// Cooperative training: per outer round, reconstructor passes then detector passes,
/// each network learning from its frozen partner's output.
pub fn train_cnts(
    train: &TimeSeries,
    cfg: &TrainConfig,
    monitor: Option<&TimeSeries>,
) -> Result<TrainedModels> {
    let prep = prepare(train, cfg, monitor)?;
    let mut reconstructor = ReconstructorModel::new(
        cfg.window,
        &cfg.reconstructor_shape(),
        derive_seed(cfg.seed, STREAM_R_INIT),
    )?;
    let mut detector = DetectorModel::new(
        cfg.window,
        &cfg.detector_shape(),
        derive_seed(cfg.seed, STREAM_D_INIT),
    )?;
    let mut r_opt = AdamState::new(reconstructor.net(), cfg.optimizer);
    let mut d_opt = AdamState::new(detector.net(), cfg.optimizer);
    let mut r_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_R_ORDER));
    let mut d_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_D_ORDER));
    let mut rec = Recorder {
        history: TrainHistory::default(),
        monitor: prep.monitor.as_ref(),
        stride: cfg.eval_stride,
    };

    for stage in 1..=cfg.epochs {
        let started = Instant::now();
        for sub in 1..=cfg.r_epochs {
            let batches = shuffled_batches(&prep.windows, cfg, &mut r_rng);
            let stats =
                train_reconstructor_epoch(&mut reconstructor, &detector, &batches, &mut r_opt, cfg)
                    .map_err(stage_context(stage, Phase::Reconstructor, sub))?;
            rec.push(
                stage,
                Phase::Reconstructor,
                sub,
                stats,
                &reconstructor,
                Some(&detector),
            )?;
        }
        for sub in 1..=cfg.d_epochs {
            let batches = shuffled_batches(&prep.windows, cfg, &mut d_rng);
            let stats =
                train_detector_epoch(&mut detector, &reconstructor, &batches, &mut d_opt, cfg)
                    .map_err(stage_context(stage, Phase::Detector, sub))?;
            rec.push(
                stage,
                Phase::Detector,
                sub,
                stats,
                &reconstructor,
                Some(&detector),
            )?;
        }
        rec.history
            .stage_seconds
            .push(started.elapsed().as_secs_f64());
    }
    Ok(TrainedModels {
        mode: TrainMode::Cnts,
        reconstructor,
        detector: Some(detector),
        history: rec.history,
        norm: prep.norm,
    })
}

fn baseline_reconstructor_inner<'a>(
    prep: &'a Prepared,
    cfg: &TrainConfig,
) -> Result<(ReconstructorModel, Recorder<'a>)> {
    let mut reconstructor = ReconstructorModel::new(
        cfg.window,
        &cfg.reconstructor_shape(),
        derive_seed(cfg.seed, STREAM_R_INIT),
    )?;
    let mut opt = AdamState::new(reconstructor.net(), cfg.optimizer);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_R_ORDER));
    let mut rec = Recorder {
        history: TrainHistory::default(),
        monitor: prep.monitor.as_ref(),
        stride: cfg.eval_stride,
    };
    for stage in 1..=cfg.epochs {
        let started = Instant::now();
        for sub in 1..=cfg.r_epochs {
            let batches = shuffled_batches(&prep.windows, cfg, &mut rng);
            let stats = train_plain_reconstructor_epoch(&mut reconstructor, &batches, &mut opt)
                .map_err(stage_context(stage, Phase::Reconstructor, sub))?;
            rec.push(
                stage,
                Phase::Reconstructor,
                sub,
                stats,
                &reconstructor,
                None,
            )?;
        }
        rec.history
            .stage_seconds
            .push(started.elapsed().as_secs_f64());
    }
    Ok((reconstructor, rec))
}

/// Single reconstructor trained on the plain MSE objective for `epochs * r_epochs` passes.
pub fn train_baseline_reconstructor(
    train: &TimeSeries,
    cfg: &TrainConfig,
    monitor: Option<&TimeSeries>,
) -> Result<TrainedModels> {
    let prep = prepare(train, cfg, monitor)?;
    let (reconstructor, rec) = baseline_reconstructor_inner(&prep, cfg)?;
    Ok(TrainedModels {
        mode: TrainMode::BaselineR,
        reconstructor,
        detector: None,
        history: rec.history,
        norm: prep.norm,
    })
}

/// Plain-MSE reconstructor trained to completion, then a detector trained against it
/// for `epochs * d_epochs` passes without any feedback to the reconstructor.
pub fn train_baseline_detector(
    train: &TimeSeries,
    cfg: &TrainConfig,
    monitor: Option<&TimeSeries>,
) -> Result<TrainedModels> {
    let prep = prepare(train, cfg, monitor)?;
    let (reconstructor, mut rec) = baseline_reconstructor_inner(&prep, cfg)?;
    let mut detector = DetectorModel::new(
        cfg.window,
        &cfg.detector_shape(),
        derive_seed(cfg.seed, STREAM_D_INIT),
    )?;
    let mut opt = AdamState::new(detector.net(), cfg.optimizer);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_D_ORDER));
    for stage in 1..=cfg.epochs {
        let started = Instant::now();
        for sub in 1..=cfg.d_epochs {
            let batches = shuffled_batches(&prep.windows, cfg, &mut rng);
            let stats =
                train_detector_epoch(&mut detector, &reconstructor, &batches, &mut opt, cfg)
                    .map_err(stage_context(stage, Phase::Detector, sub))?;
            rec.push(
                stage,
                Phase::Detector,
                sub,
                stats,
                &reconstructor,
                Some(&detector),
            )?;
        }
        rec.history.stage_seconds[stage - 1] += started.elapsed().as_secs_f64();
    }
    Ok(TrainedModels {
        mode: TrainMode::BaselineDetection,
        reconstructor,
        detector: Some(detector),
        history: rec.history,
        norm: prep.norm,
    })
}

/// Dispatches on `mode`.
pub fn train(
    mode: TrainMode,
    series: &TimeSeries,
    cfg: &TrainConfig,
    monitor: Option<&TimeSeries>,
) -> Result<TrainedModels> {
    match mode {
        TrainMode::Cnts => train_cnts(series, cfg, monitor),
        TrainMode::BaselineR => train_baseline_reconstructor(series, cfg, monitor),
        TrainMode::BaselineDetection => train_baseline_detector(series, cfg, monitor),
    }
}
