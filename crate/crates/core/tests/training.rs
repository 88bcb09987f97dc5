use cnts_core::data::{synth_series, BaseSignal, BenchmarkSpec, SynthSpec};
use cnts_core::seed::derive_seed;
use cnts_core::train::{
    train, train_baseline_detector, train_baseline_reconstructor, train_cnts, Phase,
};
use cnts_core::{
    CntsError, DetectorModel, ReconstructorModel, Role, TimeSeries, TrainConfig, TrainHistory,
    TrainMode,
};

fn small_benchmark(seed: u64) -> (TimeSeries, TimeSeries) {
    BenchmarkSpec {
        length: 600,
        spikes: 6,
        level_shifts: 1,
        ..BenchmarkSpec::default()
    }
    .generate(seed)
    .unwrap()
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        r_epochs: 2,
        d_epochs: 2,
        window: 16,
        batch_size: 16,
        seed,
        ..TrainConfig::default()
    }
}

fn clean_sine() -> TimeSeries {
    let spec = SynthSpec {
        length: 800,
        base: BaseSignal::sine(50.0, 1.0),
        noise_std: 0.0,
        anomalies: vec![],
        seed: 0,
    };
    synth_series(&spec, "sine", Role::Train)
        .unwrap()
        .without_labels()
}

#[test]
fn labeled_training_series_is_rejected() {
    let (_, test) = small_benchmark(1);
    for mode in TrainMode::ALL {
        let err = train(mode, &test, &small_config(0), None).unwrap_err();
        assert!(matches!(err, CntsError::Validation(_)), "{mode:?}: {err:?}");
    }
}

#[test]
fn no_passes_leaves_both_networks_at_init() {
    let (train_series, _) = small_benchmark(2);
    let cfg = TrainConfig {
        epochs: 1,
        r_epochs: 0,
        d_epochs: 0,
        ..small_config(4)
    };
    let models = train_cnts(&train_series, &cfg, None).unwrap();
    let r0 =
        ReconstructorModel::new(cfg.window, &cfg.reconstructor_shape(), derive_seed(4, 1)).unwrap();
    let d0 = DetectorModel::new(cfg.window, &cfg.detector_shape(), derive_seed(4, 2)).unwrap();
    assert_eq!(models.reconstructor, r0);
    assert_eq!(models.detector.unwrap(), d0);
    assert!(models.history.is_empty());
}

#[test]
fn without_detector_passes_the_detector_stays_at_init() {
    let (train_series, _) = small_benchmark(3);
    let cfg = TrainConfig {
        d_epochs: 0,
        ..small_config(6)
    };
    let models = train_cnts(&train_series, &cfg, None).unwrap();
    let d0 = DetectorModel::new(cfg.window, &cfg.detector_shape(), derive_seed(6, 2)).unwrap();
    assert_eq!(models.detector.unwrap().digest(), d0.digest());
    assert_eq!(models.history.len(), cfg.epochs * cfg.r_epochs);
}

#[test]
fn detector_loss_falls_against_a_fixed_reconstructor() {
    let mut improved = 0;
    for seed in 0..5 {
        let (train_series, _) = small_benchmark(seed);
        let models = train_baseline_detector(&train_series, &small_config(seed), None).unwrap();
        let d: Vec<f64> = models
            .history
            .phase(Phase::Detector)
            .map(|r| r.loss_d.unwrap())
            .collect();
        if d.last().unwrap() < d.first().unwrap() {
            improved += 1;
        }
    }
    assert!(improved >= 4, "detector loss fell on {improved}/5 seeds");
}

#[test]
fn plain_reconstruction_loss_falls_on_a_clean_sine() {
    let cfg = TrainConfig {
        epochs: 3,
        r_epochs: 1,
        window: 16,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let models = train_baseline_reconstructor(&clean_sine(), &cfg, None).unwrap();
    let losses: Vec<f64> = models
        .history
        .records
        .iter()
        .map(|r| r.loss_r.unwrap())
        .collect();
    assert_eq!(losses.len(), 3);
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn kept_point_loss_falls_within_a_stage() {
    let mut improved = 0;
    for seed in 0..5 {
        let (train_series, _) = small_benchmark(seed + 10);
        let cfg = TrainConfig {
            epochs: 1,
            r_epochs: 4,
            ..small_config(seed)
        };
        let models = train_cnts(&train_series, &cfg, None).unwrap();
        let r: Vec<f64> = models
            .history
            .records
            .iter()
            .filter_map(|r| r.loss_r)
            .collect();
        if r.last().unwrap() < r.first().unwrap() {
            improved += 1;
        }
    }
    assert!(improved >= 4, "kept-point loss fell on {improved}/5 seeds");
}

#[test]
fn baseline_detection_records_reconstructor_passes_first() {
    let (train_series, test) = small_benchmark(5);
    let cfg = small_config(1);
    let models = train_baseline_detector(&train_series, &cfg, Some(&test)).unwrap();
    let phases: Vec<Phase> = models.history.records.iter().map(|r| r.phase).collect();
    let split = cfg.epochs * cfg.r_epochs;
    assert_eq!(phases.len(), split + cfg.epochs * cfg.d_epochs);
    assert!(phases[..split].iter().all(|&p| p == Phase::Reconstructor));
    assert!(phases[split..].iter().all(|&p| p == Phase::Detector));
    assert_eq!(models.history.stage_seconds.len(), cfg.epochs);
}

#[test]
fn monitor_fills_every_record_and_survives_csv() {
    let (train_series, test) = small_benchmark(6);
    let models = train_cnts(&train_series, &small_config(2), Some(&test)).unwrap();
    for r in &models.history.records {
        let m = r.monitor.expect("monitor metrics");
        assert!((0.0..=1.0).contains(&m.f1));
        assert!(m.mse_n >= 0.0 && m.mse_a >= 0.0 && m.dis.is_finite());
    }
    let back = TrainHistory::from_csv(&models.history.to_csv()).unwrap();
    assert_eq!(back.records, models.history.records);

    let unmonitored = train_cnts(&train_series, &small_config(2), None).unwrap();
    assert!(unmonitored
        .history
        .records
        .iter()
        .all(|r| r.monitor.is_none()));
    assert_eq!(unmonitored.reconstructor, models.reconstructor);
}

#[test]
fn baseline_detection_beats_half_f1_on_the_benchmark() {
    let (train_series, test) = BenchmarkSpec::default().generate(0).unwrap();
    let cfg = TrainConfig::synthetic_benchmark();
    let models = train_baseline_detector(&train_series, &cfg, None).unwrap();
    let report = models.evaluate(&test, cfg.eval_stride).unwrap();
    assert!(report.f1 > 0.5, "best F1 {}", report.f1);
}
