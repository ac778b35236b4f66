use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwellcert_bench::mid_system;
use dwellcert_core::benchmarks::synthesis_example;
use dwellcert_core::clockcond::{exact_constant_dt, pwl_constant_dt, CertOptions};
use dwellcert_core::dtsearch::smallest_constant_dt;
use dwellcert_core::synthesis::{min_dt_sf, SynthOptions};
use std::hint::black_box;

fn bench_exact(c: &mut Criterion) {
    let sys = mid_system();
    let opts = CertOptions::default();
    c.bench_function("exact_constant_dt", |b| b.iter(|| exact_constant_dt(black_box(&sys), 3.0, &opts).unwrap()));
}

fn bench_pwl(c: &mut Criterion) {
    let sys = mid_system();
    let opts = CertOptions::default();
    let mut g = c.benchmark_group("pwl_constant_dt");
    g.sample_size(10);
    for n in [10, 25, 50] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| pwl_constant_dt(black_box(&sys), 3.0, n, &opts).unwrap()));
    }
    g.finish();
}

fn bench_search(c: &mut Criterion) {
    let sys = mid_system();
    c.bench_function("smallest_constant_dt", |b| b.iter(|| smallest_constant_dt(black_box(&sys), (0.01, 10.0), 1e-4).unwrap()));
}

fn bench_synthesis(c: &mut Criterion) {
    let sys = synthesis_example();
    let opts = SynthOptions::default();
    let mut g = c.benchmark_group("synthesis");
    g.sample_size(10);
    g.bench_function("min_dt_sf/N10", |b| b.iter(|| min_dt_sf(black_box(&sys), 0.1, 10, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_exact, bench_pwl, bench_search, bench_synthesis);
criterion_main!(benches);
