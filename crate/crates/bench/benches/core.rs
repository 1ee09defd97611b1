use std::hint::black_box;

use charpent_core::geometry::Gamma0;
use charpent_core::maxprin::{batch_verify, generate_instance};
use charpent_core::symbol::coeffs_from_roots;
use charpent_core::traces::{green_flux_residual, wave_disk_demo};
use charpent_core::{
    build_pentagon, build_symbol, cascade_solve, parse, CauchyData, ProblemInstance, SymbolCoefficients,
    Tolerances,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn wave() -> charpent_core::HyperbolicSymbol {
    build_symbol(SymbolCoefficients::new([1.0, 0.0, -5.0, 0.0, 4.0]).unwrap()).unwrap()
}

fn symbol(c: &mut Criterion) {
    c.bench_function("build_symbol", |b| {
        b.iter(|| build_symbol(coeffs_from_roots(1.3, black_box([-2.1, -0.7, 0.4, 1.9])).unwrap()).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let exact = parse("-exp(x1 + x2)").unwrap();
    let mut group = c.benchmark_group("cascade_solve");
    for h in [0.04, 0.02, 0.01] {
        let inst = ProblemInstance {
            symbol: wave(),
            gamma0: Gamma0::new(0.0, 1.0).unwrap(),
            data: CauchyData::from_solution(&exact).unwrap(),
            f: parse("0").unwrap(),
            h,
        };
        group.bench_function(format!("h={h}"), |b| {
            b.iter(|| cascade_solve(black_box(&inst)).unwrap())
        });
    }
    group.finish();
}

fn identities(c: &mut Criterion) {
    let s = wave();
    let poly = build_pentagon(&s, Gamma0::new(0.25, 0.75).unwrap(), [0.5, 0.3])
        .unwrap()
        .polygon()
        .clone();
    let (u, v) = (parse("sin(x1 + 2*x2)").unwrap(), parse("exp(x1 - x2)").unwrap());
    c.bench_function("green_flux_residual order 7", |b| {
        b.iter(|| green_flux_residual(&s, &u, &v, &poly, 7).unwrap())
    });
}

fn disk(c: &mut Criterion) {
    let radii: Vec<f64> = (2..=6).map(|k| 1.0 - 10f64.powi(-k)).collect();
    c.bench_function("wave_disk_demo", |b| {
        b.iter(|| wave_disk_demo(-0.625, black_box(&radii)).unwrap())
    });
}

fn maxprin(c: &mut Criterion) {
    let mut group = c.benchmark_group("maxprin");
    group.sample_size(10);
    group.bench_function("generate_instance", |b| {
        b.iter(|| generate_instance(black_box(42), 0.01, 1e-10).unwrap())
    });
    group.bench_function("batch of 8 at h=0.02", |b| {
        b.iter(|| batch_verify(8, 1, 0.02, &Tolerances::default(), None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, symbol, solver, identities, disk, maxprin);
criterion_main!(benches);
