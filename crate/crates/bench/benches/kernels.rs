use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use quasiflow::evolve::{solve_dispersive_burgers, SolverConfig};
use quasiflow::paradiff::{paradiff_apply, paraproduct, CutoffConfig};
use quasiflow::spectral::{forward_transform, inverse_transform};
use quasiflow_bench::{grid, test_field, transport_symbol};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform_round_trip");
    for n in [256usize, 1024, 4096] {
        let u = test_field(grid(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| inverse_transform(&forward_transform(black_box(u))).unwrap())
        });
    }
    group.finish();
}

fn if_rk4_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("if_rk4_ten_steps");
    let cfg = SolverConfig { dt_max: 1e-3, cfl: 1e6, ..SolverConfig::default() };
    for n in [256usize, 1024] {
        let u = test_field(grid(n)).scale(0.01);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| solve_dispersive_burgers(black_box(u), 1.0, 1e-2, &cfg).unwrap())
        });
    }
    group.finish();
}

fn paraproducts(c: &mut Criterion) {
    let mut group = c.benchmark_group("paraproduct");
    for n in [256usize, 1024] {
        let g = grid(n);
        let a = test_field(g);
        let u = a.derivative(1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(a, u), |b, (a, u)| {
            b.iter(|| paraproduct(black_box(a), black_box(u)).unwrap())
        });
    }
    group.finish();
}

fn quantization(c: &mut Criterion) {
    let mut group = c.benchmark_group("paradiff_apply");
    group.sample_size(20);
    let cut = CutoffConfig::default();
    for n in [128usize, 256] {
        let g = grid(n);
        let sym = transport_symbol(g);
        let u = test_field(g);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| paradiff_apply(&sym, black_box(u), &cut).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, if_rk4_steps, paraproducts, quantization);
criterion_main!(benches);
