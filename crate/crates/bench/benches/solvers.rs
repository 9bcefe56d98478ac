//! End-to-end solver benchmarks: each algorithm with and without the
//! compression step, at a size where the difference is visible but the
//! bench still completes quickly.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ntd_bench::exact_rank_tensor;
use ntd_core::ntd::{solve, Algorithm, SolverConfig};

fn bench_solvers(c: &mut Criterion) {
    let extents = [25usize, 25, 25];
    let ranks = vec![3usize, 3, 3];
    let data = exact_rank_tensor(11, &extents, &ranks);
    let mut group = c.benchmark_group("solve_25cube_rank3_20sweeps");
    group.sample_size(10);
    for algorithm in [Algorithm::Mu, Algorithm::Hals, Algorithm::Apg, Algorithm::Als] {
        for use_lra in [false, true] {
            let mut cfg = SolverConfig::new(ranks.clone());
            cfg.algorithm = algorithm;
            cfg.use_lra = use_lra;
            cfg.outer_iters = 20;
            cfg.tol = 0.0;
            cfg.seed = 7;
            let label = format!(
                "{algorithm}_{}",
                if use_lra { "compressed" } else { "direct" }
            );
            group.bench_function(label, |b| {
                b.iter(|| solve(black_box(&data), black_box(&cfg), None).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_solvers);
criterion_main!(benches);
