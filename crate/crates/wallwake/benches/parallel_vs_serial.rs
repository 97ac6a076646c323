//! Throughput comparison of the rayon-backed batched entry points against
//! their sequential twins. Run with `cargo bench` (parallel feature on, the
//! default) — each parallel/serial pair operates on identical inputs and the
//! implementations are bit-identical in output, so the timings isolate the
//! scheduling overhead and speedup.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use wallwake::convolve::{product_spectrum, product_spectrum_serial};
use wallwake::field::SpectralField;
use wallwake::grid::{WallNormalGrid, WaveNumberGrid};
use wallwake::oseen::{solve_all_modes, solve_all_modes_serial};

/// Smooth compact profile in `(lo, hi)`, zero outside.
fn bump(y: f64, lo: f64, hi: f64) -> f64 {
    if y <= lo || y >= hi {
        return 0.0;
    }
    let t = (y - lo) / (hi - lo);
    256.0 * (t * (1.0 - t)).powi(4)
}

fn mode_batch() -> (SpectralField, SpectralField) {
    let kg = WaveNumberGrid::clustered(1.0 / 64.0, 64.0, 64).unwrap();
    let yg = WallNormalGrid::stretched(40.0, 0.02, 1.04).unwrap();
    let q0 = SpectralField::from_fn(kg.clone(), yg.clone(), |k, y| {
        Complex64::new(bump(y, 1.5, 6.0) / (1.0 + k * k), k * bump(y, 2.0, 7.0) / (1.0 + k * k))
    });
    let q1 = SpectralField::from_fn(kg, yg, |k, y| {
        Complex64::new(k * bump(y, 1.8, 6.5) / (1.0 + k * k), bump(y, 1.6, 6.2) / (1.0 + k * k))
    });
    (q0, q1)
}

fn convolution_batch() -> (SpectralField, SpectralField) {
    let kg = WaveNumberGrid::clustered(1.0 / 64.0, 64.0, 128).unwrap();
    let yg = WallNormalGrid::stretched(30.0, 0.05, 1.05).unwrap();
    let a = SpectralField::from_fn(kg.clone(), yg.clone(), |k, y| {
        Complex64::new((-0.01 * k * k).exp() / y, k * (-0.02 * k * k).exp())
    });
    let b = SpectralField::from_fn(kg, yg, |k, y| {
        Complex64::new(k / (1.0 + k * k) * (y - 1.0).min(1.0), (-0.015 * k * k).exp())
    });
    (a, b)
}

fn bench_mode_solves(c: &mut Criterion) {
    let (q0, q1) = mode_batch();
    let mut group = c.benchmark_group("solve_all_modes");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(|| (), |_| solve_all_modes(&q0, &q1).unwrap(), BatchSize::SmallInput)
    });
    group.bench_function("serial", |b| {
        b.iter_batched(|| (), |_| solve_all_modes_serial(&q0, &q1).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

fn bench_products(c: &mut Criterion) {
    let (a, b) = convolution_batch();
    let mut group = c.benchmark_group("product_spectrum");
    group.sample_size(10);
    group.bench_function("parallel", |bch| {
        bch.iter_batched(|| (), |_| product_spectrum(&a, &b).unwrap(), BatchSize::SmallInput)
    });
    group.bench_function("serial", |bch| {
        bch.iter_batched(|| (), |_| product_spectrum_serial(&a, &b).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, bench_mode_solves, bench_products);
criterion_main!(benches);
