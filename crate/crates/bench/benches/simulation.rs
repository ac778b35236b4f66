use criterion::{criterion_group, criterion_main, Criterion};
use dwellcert_bench::sim_spec;
use dwellcert_core::sde_sim::simulate;
use std::hint::black_box;

fn bench_simulate(c: &mut Criterion) {
    let spec = sim_spec(200);
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("200_paths", |b| b.iter(|| simulate(black_box(&spec)).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_simulate);
criterion_main!(benches);
