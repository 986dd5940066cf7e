use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use dantzig_density::solvers::{dantzig_solve, lasso_solve, two_step_refit};
use dantzig_density::{DantzigProblem, DensityId, DictionaryKind, SolverOptions};
use dantzig_density_bench::fixture;

fn dantzig(c: &mut Criterion) {
    let mut group = c.benchmark_group("dantzig");
    group.sample_size(20);
    let opts = SolverOptions::default();
    for (kind, n) in [(DictionaryKind::Haar, 500), (DictionaryKind::Mix, 500), (DictionaryKind::Mix2, 500)] {
        let (setup, stats) = fixture(DensityId::F3, kind, n, 7);
        let p = DantzigProblem::new(&setup.gram, &stats.beta_hat, &stats.eta).unwrap();
        group.bench_with_input(BenchmarkId::new(kind.name(), n), &p, |b, p| {
            b.iter(|| dantzig_solve(black_box(p), &opts).unwrap())
        });
    }
    group.finish();
}

fn lasso(c: &mut Criterion) {
    let mut group = c.benchmark_group("lasso");
    group.sample_size(20);
    let opts = SolverOptions::default();
    for (kind, n) in [(DictionaryKind::Mix, 500), (DictionaryKind::Mix2, 500)] {
        let (setup, stats) = fixture(DensityId::F3, kind, n, 7);
        let p = DantzigProblem::new(&setup.gram, &stats.beta_hat, &stats.eta).unwrap();
        group.bench_with_input(BenchmarkId::new(kind.name(), n), &p, |b, p| {
            b.iter(|| lasso_solve(black_box(p), &opts).unwrap())
        });
    }
    group.finish();
}

fn refit(c: &mut Criterion) {
    let (setup, stats) = fixture(DensityId::F1, DictionaryKind::Mix2, 500, 3);
    let p = DantzigProblem::new(&setup.gram, &stats.beta_hat, &stats.eta).unwrap();
    let (d, _) = dantzig_solve(&p, &SolverOptions::default()).unwrap();
    c.bench_function("refit/mix2/500", |b| {
        b.iter(|| two_step_refit(&setup.gram, black_box(&stats.beta_hat), &d.support).unwrap())
    });
}

criterion_group!(benches, dantzig, lasso, refit);
criterion_main!(benches);
