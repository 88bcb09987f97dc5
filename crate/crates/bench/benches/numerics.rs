use cnts_core::eval::{auc, best_f1_threshold};
use cnts_core::models::NetShape;
use cnts_core::numerics::Matrix;
use cnts_core::DenseNet;
use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn dense(c: &mut Criterion) {
    let window = 64;
    let shape = NetShape::default_reconstructor(window);
    let net = DenseNet::init(&shape.dims(window), &shape.activations(), 1).unwrap();
    let input = batch(128, window, 2);
    let grad = batch(128, window, 3);
    c.bench_function("forward 128x64", |b| {
        b.iter(|| net.forward(black_box(&input)).unwrap())
    });
    let trace = net.forward(&input).unwrap();
    c.bench_function("backward 128x64", |b| {
        b.iter(|| net.backward(black_box(&trace), &grad).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: Vec<f64> = (0..4000).map(|_| rng.gen()).collect();
    let labels: Vec<u8> = (0..4000).map(|i| u8::from(i % 50 == 0)).collect();
    c.bench_function("best_f1 4000", |b| {
        b.iter(|| best_f1_threshold(black_box(&scores), &labels).unwrap())
    });
    c.bench_function("auc 4000", |b| {
        b.iter(|| auc(black_box(&scores), &labels).unwrap())
    });
}

criterion_group!(benches, dense, metrics);
criterion_main!(benches);
