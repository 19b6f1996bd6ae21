use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use freqrise_core::{dft_onesided, idft_onesided, istdft, stdft, TimeSeries, WindowSpec};

fn test_signal(len: usize) -> TimeSeries {
    let samples = (0..len)
        .map(|n| (0.37 * n as f64).sin() + 0.5 * (0.011 * n as f64).cos())
        .collect();
    TimeSeries::new(samples, len as f64).unwrap()
}

fn dft(c: &mut Criterion) {
    for len in [2560usize, 8000] {
        let x = test_signal(len);
        let view = dft_onesided(&x).unwrap();
        c.bench_function(&format!("dft-{len}"), |b| {
            b.iter(|| dft_onesided(black_box(&x)).unwrap())
        });
        c.bench_function(&format!("idft-{len}"), |b| {
            b.iter(|| idft_onesided(black_box(&view)).unwrap())
        });
    }
}

fn short_time(c: &mut Criterion) {
    let x = test_signal(8000);
    let window = WindowSpec::hann(455, 35);
    let view = stdft(&x, &window).unwrap();
    c.bench_function("stdft-8000-hann455", |b| {
        b.iter(|| stdft(black_box(&x), &window).unwrap())
    });
    c.bench_function("istdft-8000-hann455", |b| {
        b.iter(|| istdft(black_box(&view)).unwrap())
    });
}

criterion_group!(benches, dft, short_time);
criterion_main!(benches);
