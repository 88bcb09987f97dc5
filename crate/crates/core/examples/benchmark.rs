//! Runs the three training modes on the synthetic benchmark and prints F1 / AUC / Dis.
//!
//! Usage: `cargo run --release -p cnts-core --example benchmark [seeds] [config.json] [benchmark.json]`

use std::time::Instant;

use cnts_core::data::BenchmarkSpec;
use cnts_core::train::{train, TrainConfig, TrainMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let base: TrainConfig = match args.next() {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => TrainConfig::synthetic_benchmark(),
    };
    let spec: BenchmarkSpec = match args.next() {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => BenchmarkSpec::default(),
    };
    let modes: Vec<TrainMode> = match std::env::var("CNTS_MODES") {
        Ok(list) => list.split(',').map(str::parse).collect::<Result<_, _>>()?,
        Err(_) => TrainMode::ALL.to_vec(),
    };
    println!("seed mode               f1     auc    dis     mse_n    mse_a   secs");
    for seed in 0..seeds {
        let (train_series, test) = spec.generate(seed)?;
        let cfg = TrainConfig {
            seed,
            ..base.clone()
        };
        for mode in modes.iter().copied() {
            let t0 = Instant::now();
            let models = train(mode, &train_series, &cfg, None)?;
            let r = models.evaluate(&test, cfg.eval_stride)?;
            println!(
                "{seed:>4} {:<18} {:.4} {:.4} {:>7.2} {:.5} {:.4} {:>5.1}",
                mode.as_str(),
                r.f1,
                r.auc,
                r.dis,
                r.mse_n,
                r.mse_a,
                t0.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
