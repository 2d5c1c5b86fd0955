use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gark::integrator::step;
use gark::problems::{prothero_robinson, SmoothProfile};
use gark::{integrate, registry, schedule_stages, SolverConfig};

fn single_step(c: &mut Criterion) {
    let ode = prothero_robinson(-1e4, SmoothProfile::Sin).unwrap();
    let y0 = ode.exact(0.0).unwrap();
    let cfg = SolverConfig::new(0.01);
    for name in ["imex-mono2", "imex-tr4", "imim-dirk2"] {
        let t = registry::get(name).unwrap();
        let sched = schedule_stages(&t).unwrap();
        c.bench_function(&format!("step {name} pr"), |b| {
            b.iter(|| step(black_box(&t), &sched, &ode, black_box(&y0), &cfg).unwrap())
        });
    }
}

fn trajectory(c: &mut Criterion) {
    let ode = prothero_robinson(-1.0, SmoothProfile::Sin).unwrap();
    let y0 = ode.exact(0.0).unwrap();
    let t = registry::get("imex-tr4").unwrap();
    let cfg = SolverConfig::new(0.01);
    c.bench_function("integrate imex-tr4 pr 100 steps", |b| {
        b.iter(|| integrate(black_box(&t), &ode, &y0, 0.0, 1.0, &cfg).unwrap())
    });
}

criterion_group!(benches, single_step, trajectory);
criterion_main!(benches);
