use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use freqrise_core::{GridSpec, MaskSampler, Shape};

fn binary(c: &mut Criterion) {
    let shape = Shape::vector(1281);
    let sampler = MaskSampler::new(shape, 0.5, None, false, 7).unwrap();
    let mut buf = vec![0.0; shape.len()];
    c.bench_function("binary-masks-1281x1000", |b| {
        b.iter(|| {
            for i in 0..1000 {
                sampler.mask_into(black_box(i), &mut buf).unwrap();
            }
        })
    });
}

fn grid(c: &mut Criterion) {
    let shape = Shape::vector(1281);
    let sampler =
        MaskSampler::new(shape, 0.5, Some(GridSpec::OneD(64)), true, 7).unwrap();
    let mut buf = vec![0.0; shape.len()];
    c.bench_function("grid-masks-1281x1000", |b| {
        b.iter(|| {
            for i in 0..1000 {
                sampler.mask_into(black_box(i), &mut buf).unwrap();
            }
        })
    });
}

criterion_group!(benches, binary, grid);
criterion_main!(benches);
