use cnts_core::data::BenchmarkSpec;
use cnts_core::train::{train, TrainConfig, TrainMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let base: TrainConfig = match args.next() {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => TrainConfig::synthetic_benchmark(),
    };
    let mode: TrainMode = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(TrainMode::Cnts);
    let (train_series, test) = BenchmarkSpec::default().generate(seed)?;
    let cfg = TrainConfig { seed, ..base };
    let models = train(mode, &train_series, &cfg, Some(&test))?;
    print!("{}", models.history.to_csv());
    let r = models.evaluate(&test, 1)?;
    println!("final f1 {:.4} auc {:.4} dis {:.3}", r.f1, r.auc, r.dis);
    Ok(())
}
