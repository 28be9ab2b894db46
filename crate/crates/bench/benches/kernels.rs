use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use korn_core::audit::{evaluate, random_input, InequalityId, StressSetup};
use korn_core::cylfield::{gradient_cyl, washer_norm_set, BoundaryCondition, QuadratureSpec, RectGeometry, WasherGeometry};
use korn_core::linalg::{smallest_eigenpairs, PencilOptions};
use korn_core::spectral::{assemble, korn15_mode, min_rayleigh, Grid, Korn15Options};
use korn_core::testfields::{harmonic_part, random_rect_field, random_washer_field};

fn washer() -> WasherGeometry {
    WasherGeometry::new(0.5, 1.0, 0.05, 1.0).unwrap()
}

fn calculus(c: &mut Criterion) {
    let field = random_washer_field(7, &washer(), BoundaryCondition::V2, 3, 0.5).unwrap();
    c.bench_function("gradient_cyl", |b| {
        b.iter(|| gradient_cyl(black_box(&field), 0.73, 1.1, 0.02).unwrap())
    });
    let spec = QuadratureSpec::gauss(4, 1, 8);
    c.bench_function("washer_norm_set/gauss8", |b| {
        b.iter(|| washer_norm_set(black_box(&field), &spec).unwrap())
    });
}

fn spectral(c: &mut Criterion) {
    let geom = washer();
    let mut group = c.benchmark_group("assemble_and_solve");
    group.sample_size(10);
    for grid in [Grid::new(32, 4), Grid::new(64, 4), Grid::new(64, 8)] {
        group.bench_with_input(BenchmarkId::new("assemble", grid), &grid, |b, &g| {
            b.iter(|| assemble(&geom, 1, BoundaryCondition::V2, g).unwrap())
        });
        let fm = assemble(&geom, 1, BoundaryCondition::V2, grid).unwrap();
        group.bench_with_input(BenchmarkId::new("min_rayleigh", grid), &fm, |b, fm| {
            b.iter(|| min_rayleigh(&fm.a, &fm.b).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("smallest_4", grid), &fm, |b, fm| {
            b.iter(|| smallest_eigenpairs(&fm.a, &fm.b, 4, &PencilOptions::default()).unwrap())
        });
    }
    let fm = assemble(&geom, 2, BoundaryCondition::V2, Grid::new(32, 4)).unwrap();
    let opts = Korn15Options {
        starts: 4,
        ..Korn15Options::default()
    };
    group.bench_function("korn15_mode/32x4", |b| b.iter(|| korn15_mode(&fm, &opts).unwrap()));
    group.finish();
}

fn audits(c: &mut Criterion) {
    let setup = StressSetup::default();
    let mut group = c.benchmark_group("audit_evaluate");
    group.sample_size(10);
    for id in [InequalityId::BlockZ, InequalityId::HarmonicSep, InequalityId::HardyAnnulus] {
        let (input, params) = random_input(id, 3, &setup).unwrap();
        group.bench_function(id.to_string(), |b| b.iter(|| evaluate(id, &input, &params).unwrap()));
    }
    let rect = RectGeometry::new(0.05, 0.5, 1.0).unwrap();
    let field = random_rect_field(11, &rect, BoundaryCondition::RectFZero, 0.5).unwrap();
    group.bench_function("harmonic_part/64x64", |b| b.iter(|| harmonic_part(&field, 64, 64).unwrap()));
    group.finish();
}

criterion_group!(benches, calculus, spectral, audits);
criterion_main!(benches);
