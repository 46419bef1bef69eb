use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jwit_core::modular::j_eval;
use jwit_core::search::coset_approximate;
use jwit_core::torus::{wp_eval, EllipticModel};
use jwit_core::{HPoint, Sl2Matrix};
use num_complex::Complex64;
use std::hint::black_box;

fn bench_j(c: &mut Criterion) {
    let mut group = c.benchmark_group("j_eval");
    for (name, z) in [("i", (0.0, 1.0)), ("cusp", (0.31, 4.0)), ("low", (0.2, 0.05))] {
        let z = HPoint::new(z.0, z.1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &z, |b, z| {
            b.iter(|| j_eval(black_box(*z), 1e-12).unwrap())
        });
    }
    group.finish();
}

fn bench_coset(c: &mut Criterion) {
    let g = Sl2Matrix::parse(["1", "sqrt(2)", "0", "1"]).unwrap();
    let target = Sl2Matrix::float(0.9, 0.37, -0.21, (1.0 - 0.37 * 0.21) / 0.9).unwrap();
    let mut group = c.benchmark_group("coset_approximate");
    group.sample_size(10);
    for h in [5, 10, 20] {
        group.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, &h| {
            b.iter(|| coset_approximate(&g, black_box(&target), h))
        });
    }
    group.finish();
}

fn bench_wp(c: &mut Criterion) {
    let model = EllipticModel::new(Complex64::new(0.1, 1.2)).unwrap();
    let u = Complex64::new(0.23, 0.41);
    c.bench_function("wp_eval", |b| {
        b.iter(|| wp_eval(black_box(u), &model, 1e-12).unwrap())
    });
}

criterion_group!(kernels, bench_j, bench_coset, bench_wp);
criterion_main!(kernels);
