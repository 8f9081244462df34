//! Kernel evaluation, operator assembly and solves.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cylpot_bench::{disk, kernel, manufactured_data};
use cylpot_core::dirichlet;
use cylpot_core::taufamily::{self, ArcDomain};
use cylpot_core::Point;

fn kernel_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_eval");
    let p = Point::new(0.2, 1.0);
    for (name, a) in [("constant", 0.0), ("variable", 0.5)] {
        let gk = kernel(a, 32);
        for (label, q) in [("near", Point::new(0.25, 1.03)), ("far", Point::new(1.7, 4.0))] {
            g.bench_function(BenchmarkId::new(name, label), |b| b.iter(|| gk.eval(black_box(p), black_box(q)).unwrap()));
        }
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    let gk = kernel(0.0, 32);
    for n in [64, 128] {
        g.bench_with_input(BenchmarkId::new("disk", n), &n, |b, &n| b.iter(|| disk(&gk, n)));
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    let gk = kernel(0.0, 32);
    let ops = disk(&gk, 128);
    let (_, f) = manufactured_data(&gk, &ops);
    g.bench_function("double_layer", |b| b.iter(|| dirichlet::solve_dirichlet(&ops, black_box(&f)).unwrap()));
    g.bench_function("single_layer", |b| b.iter(|| dirichlet::ssinv_solve(&ops, black_box(&f)).unwrap()));
    let sol = dirichlet::solve_dirichlet(&ops, &f).unwrap();
    g.bench_function("evaluate_interior", |b| b.iter(|| sol.value(black_box(Point::new(0.1, PI + 0.1))).unwrap()));
    g.finish();
}

fn indicial(c: &mut Criterion) {
    let gk = kernel(0.5, 32);
    let domain = ArcDomain::from_spectrum(gk.spectrum(), vec![(0.3, 2.5), (3.0, 5.5)]).unwrap();
    c.bench_function("tau_layer_matrices", |b| {
        b.iter(|| taufamily::tau_layer_matrices(&domain, gk.spectrum(), black_box(3.5)))
    });
}

criterion_group!(benches, kernel_eval, assembly, solve, indicial);
criterion_main!(benches);
