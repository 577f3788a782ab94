use criterion::{black_box, criterion_group, criterion_main, Criterion};

use kwlab_core::decomposition::decomposition_suite;
use kwlab_core::energy::compute_c_h;
use kwlab_core::halfspace::{kw_residual_flat, sample_points, FlatModelField};
use kwlab_core::invariant::{kw_residual, log_grid};
use kwlab_core::quadrature::QuadratureSpec;
use kwlab_core::reduced::{derive_reduced_system, he_state, indicial_expand, integrate_ivp, shoot_for_decay, IndicialOptions, ShootSpec, StepControl};
use kwlab_core::{GeometryConventions, InvariantField};

const CONV: GeometryConventions = GeometryConventions::GOLDEN;

fn residuals(c: &mut Criterion) {
    let he = InvariantField::he();
    let ys = log_grid(1e-3, 30.0, 300);
    c.bench_function("he_residual_300", |b| {
        b.iter(|| ys.iter().map(|&y| kw_residual(&CONV, &he, y).unwrap().1).fold(0.0, f64::max))
    });
    let singular = FlatModelField::nahm_singular();
    let pts = sample_points(42, 1000, 0.1);
    c.bench_function("nahm_singular_residual_1000", |b| {
        b.iter(|| pts.iter().map(|p| kw_residual_flat(&singular, p)).fold(0.0, f64::max))
    });
}

fn decomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("decomposition");
    g.sample_size(10);
    g.bench_function("suite_1000", |b| b.iter(|| decomposition_suite(black_box(42), 1000).unwrap()));
    g.finish();
}

fn energy(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy");
    g.sample_size(10);
    let quad = QuadratureSpec::default();
    g.bench_function("c_h", |b| b.iter(|| compute_c_h(&CONV, black_box(&quad)).unwrap()));
    g.finish();
}

fn solver(c: &mut Criterion) {
    let sys = derive_reduced_system(&CONV).unwrap();
    let ctl = StepControl::default();
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    g.bench_function("ivp_he_0.1_to_10", |b| b.iter(|| integrate_ivp(&sys, 0.1, he_state(0.1), black_box(10.0), &ctl).unwrap()));
    let base = indicial_expand(&sys, 6, &IndicialOptions::default()).unwrap();
    let spec = ShootSpec::default();
    g.bench_function("shoot_for_decay", |b| b.iter(|| shoot_for_decay(&sys, &base, black_box(&spec)).unwrap()));
    g.finish();
}

criterion_group!(benches, residuals, decomposition, energy, solver);
criterion_main!(benches);
