use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pathrep::frac_calc::{default_beta, gls_integral, rl_derivative_left, Beta, GridFunction};
use pathrep::gp_sim::{PathSampler, SamplingMethod};
use pathrep::replicate::{
    build_diverging_integrand, default_holder_params, default_lemma_params, path_order, replicate_holder,
    HolderOptions, HolderTarget, PartitionSchedule,
};
use pathrep::{CovarianceModel, TimeGrid};

fn fbm() -> CovarianceModel {
    CovarianceModel::fbm(0.75, 1.0).unwrap()
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_path");
    for cells in [1usize << 10, 1 << 13] {
        let s = PathSampler::new(&fbm(), TimeGrid::uniform(1.0, cells).unwrap().shared()).unwrap();
        g.bench_with_input(BenchmarkId::new("circulant", cells), &s, |b, s| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                black_box(s.sample(7, i))
            })
        });
    }
    let grid = TimeGrid::uniform(1.0, 1 << 10).unwrap().shared();
    let s = PathSampler::with_method(&fbm(), grid, SamplingMethod::Cholesky).unwrap();
    g.bench_function(BenchmarkId::new("cholesky", 1 << 10), |b| {
        let mut i = 0;
        b.iter(|| {
            i += 1;
            black_box(s.sample(7, i))
        })
    });
    g.finish();
}

fn fractional(c: &mut Criterion) {
    let mut g = c.benchmark_group("fractional");
    for cells in [1usize << 10, 1 << 12] {
        let grid = TimeGrid::uniform(1.0, cells).unwrap().shared();
        let f = GridFunction::from_fn(grid.clone(), |s| s.sqrt()).unwrap();
        let x = PathSampler::new(&fbm(), grid.clone()).unwrap().sample(3, 0);
        let y = GridFunction::new(grid, x.values).unwrap();
        let beta = default_beta(0.75).unwrap();
        g.bench_with_input(BenchmarkId::new("rl_derivative_left", cells), &f, |b, f| {
            b.iter(|| black_box(rl_derivative_left(f, Beta::new(0.5).unwrap()).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("gls_integral", cells), &(f, y), |b, (f, y)| {
            b.iter(|| black_box(gls_integral(f, y, beta, 1.0).unwrap()))
        });
    }
    g.finish();
}

fn replication(c: &mut Criterion) {
    let mut g = c.benchmark_group("replicate");
    let m = fbm();
    let x = PathSampler::new(&m, TimeGrid::uniform(1.0, 1 << 13).unwrap().shared()).unwrap().sample(5, 0);
    let lp = default_lemma_params(0.75).unwrap();
    let sch = PartitionSchedule::new(lp.gamma, 1.0, 200, 1e-10).unwrap();
    g.bench_function("diverging_2^13", |b| {
        b.iter(|| black_box(build_diverging_integrand(&x, &lp, &sch, 3.0).unwrap()))
    });
    let hp = default_holder_params(0.75, path_order(0.75)).unwrap();
    let hs = PartitionSchedule::new(hp.gamma, 1.0, 30, 1e-10).unwrap();
    let opts = HolderOptions::new(lp, 0.05);
    g.bench_function("holder_2^13", |b| {
        b.iter(|| black_box(replicate_holder(&HolderTarget::Path, &x, &hp, &hs, &opts).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, sampling, fractional, replication);
criterion_main!(benches);
