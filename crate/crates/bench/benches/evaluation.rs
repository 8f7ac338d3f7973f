use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use hyperop::phi::{self, PHI_EPS};
use hyperop::{Jet, Tetration, Tower, TowerConfig};
use hyperop_bench::grid;

fn phi_bench(c: &mut Criterion) {
    let pts = grid(-3.0, 2.0, 16);
    c.bench_function("phi/real_16", |b| {
        b.iter(|| pts.iter().map(|&s| phi::phi(black_box(s), PHI_EPS).unwrap()).sum::<f64>())
    });
    let s = Jet::variable(0.5, 6);
    c.bench_function("phi/jet_order_6", |b| b.iter(|| phi::phi_jet(black_box(&s), PHI_EPS).unwrap()));
}

fn tetration_bench(c: &mut Criterion) {
    let tet = Tetration::default();
    let pts = grid(-1.5, 2.5, 16);
    c.bench_function("tetration/eval_16", |b| {
        b.iter(|| pts.iter().map(|&t| tet.eval(black_box(t)).unwrap()).sum::<f64>())
    });
    let xs: Vec<f64> = pts.iter().map(|&t| tet.eval(t).unwrap()).collect();
    c.bench_function("tetration/slog_16", |b| {
        b.iter(|| xs.iter().map(|&x| tet.slog(black_box(x)).unwrap()).sum::<f64>())
    });
    let j = Jet::variable(0.3, 6);
    c.bench_function("tetration/jet_order_6", |b| b.iter(|| tet.eval_jet(black_box(&j)).unwrap()));
}

fn tower_bench(c: &mut Criterion) {
    let tower = Tower::build(TowerConfig::default(), 3).unwrap();
    let e3 = tower.level(3).unwrap();
    let mut g = c.benchmark_group("pentation");
    g.sample_size(20).measurement_time(Duration::from_secs(5));
    g.bench_function("eval", |b| b.iter(|| e3.eval(black_box(0.4)).unwrap()));
    g.bench_function("inverse", |b| b.iter(|| e3.inverse(black_box(1.7)).unwrap()));
    g.bench_function("guarded", |b| b.iter(|| e3.eval_guarded(black_box(3.0)).unwrap()));
    g.finish();
}

fn jet_bench(c: &mut Criterion) {
    let a = Jet::from_coeffs(&[0.4, 1.0, -0.3, 0.2, 0.1, -0.05, 0.02]).unwrap();
    let b2 = Jet::from_coeffs(&[1.3, 0.5, 0.25, -0.1, 0.05, 0.01, 0.0]).unwrap();
    c.bench_function("jet/mul", |b| b.iter(|| black_box(a) * black_box(b2)));
    c.bench_function("jet/div", |b| b.iter(|| black_box(a).div(&black_box(b2)).unwrap()));
    c.bench_function("jet/exp", |b| b.iter(|| black_box(a).exp().unwrap()));
    c.bench_function("jet/ln", |b| b.iter(|| black_box(b2).ln().unwrap()));
    c.bench_function("jet/compose", |b| b.iter(|| black_box(b2).compose(&black_box(a)).unwrap()));
}

criterion_group!(benches, jet_bench, phi_bench, tetration_bench, tower_bench);
criterion_main!(benches);
