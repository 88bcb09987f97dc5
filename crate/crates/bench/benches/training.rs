use cnts_core::data::BenchmarkSpec;
use cnts_core::train::train_cnts;
use cnts_core::TrainConfig;
use criterion::{criterion_group, criterion_main, Criterion};

// one outer round of the synthetic benchmark schedule on a shortened series
fn stage(c: &mut Criterion) {
    let spec = BenchmarkSpec {
        length: 1000,
        spikes: 10,
        level_shifts: 1,
        ..BenchmarkSpec::default()
    };
    let (train, _) = spec.generate(0).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::synthetic_benchmark()
    };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("cnts stage 1000 points", |b| {
        b.iter(|| train_cnts(&train, &cfg, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, stage);
criterion_main!(benches);
