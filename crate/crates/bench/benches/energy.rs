use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gammalab::autocorr::correlation_map;
use gammalab::energy::{difference_counts, energy_direct_with, DifferenceRoute};
use gammalab::kernels::{integrated_kernel, Kernel, DEFAULT_TOL};
use gammalab::minimize::{anneal, random_field, AnnealConfig};
use gammalab::torus::rasterize;
use gammalab::{ShapeSpec, ShiftWeights, TorusGrid};
use std::hint::black_box;

fn bench_kernel_table(c: &mut Criterion) {
    let k = Kernel::parse("helmholtz", 2).unwrap();
    c.bench_function("integrated_kernel/helmholtz", |b| {
        b.iter(|| integrated_kernel(black_box(&k), DEFAULT_TOL).unwrap())
    });
}

fn bench_weights(c: &mut Criterion) {
    let t = integrated_kernel(&Kernel::parse("helmholtz", 2).unwrap(), DEFAULT_TOL).unwrap();
    let mut group = c.benchmark_group("shift_weights");
    group.sample_size(10);
    for n in [256, 512] {
        let g = TorusGrid::new(2, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, &g| {
            b.iter(|| ShiftWeights::new(&t, g, 0.05, 1.0).unwrap())
        });
    }
    group.finish();
}

fn bench_direct_energy(c: &mut Criterion) {
    let t = integrated_kernel(&Kernel::parse("helmholtz", 2).unwrap(), DEFAULT_TOL).unwrap();
    let s = ShapeSpec::square([0.25, 0.25], 0.5).unwrap();
    let mut group = c.benchmark_group("difference_counts");
    for n in [128, 512] {
        let f = rasterize(&s, TorusGrid::new(2, n).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("correlation", n), &f, |b, f| {
            b.iter(|| difference_counts(f, DifferenceRoute::Correlation).unwrap())
        });
        if n <= 128 {
            group.bench_with_input(BenchmarkId::new("bitwise", n), &f, |b, f| {
                b.iter(|| difference_counts(f, DifferenceRoute::Bitwise).unwrap())
            });
        }
    }
    group.finish();

    let g = TorusGrid::new(2, 256).unwrap();
    let f = rasterize(&s, g).unwrap();
    let w = ShiftWeights::new(&t, g, 0.05, 1.0).unwrap();
    let p = s.perimeter_estimate();
    c.bench_function("energy_direct/256", |b| {
        b.iter(|| energy_direct_with(black_box(&f), &w, 0.5, &p, DifferenceRoute::Correlation).unwrap())
    });
    c.bench_function("correlation_map/256", |b| b.iter(|| correlation_map(black_box(&f))));
}

fn bench_anneal(c: &mut Criterion) {
    let t = integrated_kernel(&Kernel::parse("helmholtz", 2).unwrap(), DEFAULT_TOL).unwrap();
    let g = TorusGrid::new(2, 64).unwrap();
    let f = random_field(g, 0.3, 1).unwrap();
    let cfg = AnnealConfig { steps: 10_000, t0: 1e-3, decay: 0.9995, swap_distance: 4, seed: 0, record_every: 10_000 };
    let mut group = c.benchmark_group("anneal");
    group.sample_size(10);
    group.bench_function("10k_steps/64", |b| b.iter(|| anneal(&f, &t, 0.5, 0.125, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_kernel_table, bench_weights, bench_direct_energy, bench_anneal);
criterion_main!(benches);
