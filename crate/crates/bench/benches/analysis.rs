use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gark::monotonicity::{scan_region, DEFAULT_AM_TOL};
use gark::order::DEFAULT_TOL;
use gark::registry;
use gark::stability::{analyze_algebraic_stability, stability_function, DEFAULT_PSD_TOL};
use gark::{assess_order, Complex64};

fn order_conditions(c: &mut Criterion) {
    let t = registry::get("imex-tr4").unwrap();
    c.bench_function("assess_order imex-tr4", |b| {
        b.iter(|| assess_order(black_box(&t), 4, DEFAULT_TOL).unwrap())
    });
}

fn stability(c: &mut Criterion) {
    let t = registry::get("imex-tr4").unwrap();
    let z = [Complex64::new(-0.5, 1.0), Complex64::new(-20.0, 0.0)];
    c.bench_function("stability_function imex-tr4", |b| {
        b.iter(|| stability_function(black_box(&t), black_box(&z)).unwrap())
    });
    c.bench_function("algebraic stability imex-tr4", |b| {
        b.iter(|| analyze_algebraic_stability(black_box(&t), DEFAULT_PSD_TOL).unwrap())
    });
}

fn monotonicity(c: &mut Criterion) {
    let t = registry::get("imex-mono2").unwrap();
    c.bench_function("scan_region imex-mono2 51x51", |b| {
        b.iter(|| scan_region(black_box(&t), &[2.0, 2.0], 51, DEFAULT_AM_TOL).unwrap())
    });
}

criterion_group!(benches, order_conditions, stability, monotonicity);
criterion_main!(benches);
