//! Kernel benchmarks: unfolding, mode products, HOSVD, and the two gradient
//! routes. The direct/compressed gradient pair is the headline comparison.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ntd_bench::{exact_rank_tensor, random_model, random_nonneg_tensor};
use ntd_core::lra::hosvd;
use ntd_core::ntd::gradients::{build_workspace, grad_factor_direct, grad_factor_lra};
use ntd_core::tensor::kernels::{mode_product, unfold};
use ntd_core::tensor::Matrix;

fn bench_unfold(c: &mut Criterion) {
    let t = random_nonneg_tensor(1, &[40, 40, 40]);
    let mut group = c.benchmark_group("unfold_40x40x40");
    for mode in 0..3 {
        group.bench_function(format!("mode{mode}"), |b| {
            b.iter(|| unfold(black_box(&t), mode).unwrap())
        });
    }
    group.finish();
}

fn bench_mode_product(c: &mut Criterion) {
    let t = random_nonneg_tensor(2, &[40, 40, 40]);
    let a = Matrix::new(8, 40, (0..320).map(|i| (i % 7) as f64).collect()).unwrap();
    c.bench_function("mode_product_40cube_to_rank8", |b| {
        b.iter(|| mode_product(black_box(&t), black_box(&a), 1).unwrap())
    });
}

fn bench_hosvd(c: &mut Criterion) {
    let t = exact_rank_tensor(3, &[40, 40, 40], &[5, 5, 5]);
    c.bench_function("hosvd_40cube_rank5", |b| {
        b.iter(|| hosvd(black_box(&t), &[5, 5, 5]).unwrap())
    });
}

fn bench_gradient_routes(c: &mut Criterion) {
    let extents = [40usize, 40, 40];
    let ranks = [5usize, 5, 5];
    let data = exact_rank_tensor(4, &extents, &ranks);
    let lra = hosvd(&data, &ranks).unwrap();
    let model = random_model(5, &extents, &ranks);
    let mut group = c.benchmark_group("factor_gradient_40cube_rank5");
    group.bench_function("direct", |b| {
        b.iter(|| grad_factor_direct(black_box(&data), black_box(&model), 0, 0.0).unwrap())
    });
    group.bench_function("compressed", |b| {
        let ws = build_workspace(&lra, &model, 0).unwrap();
        b.iter(|| grad_factor_lra(black_box(&ws), &lra, &model, 0, 0.0).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_unfold,
    bench_mode_product,
    bench_hosvd,
    bench_gradient_routes
);
criterion_main!(benches);
