use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kgm_bench::{bump, cube, dipole_lifting, flux_lifting, params};
use kgm_core::critical::{lambda_k, minimize_j, mountain_pass, DescentOptions, MountainPassOptions};
use kgm_core::elliptic::{compute_phi_u, solve_chi};
use kgm_core::reduced::{Nonlinearity, ReducedFunctional};
use kgm_core::BoundaryData;

fn linear_solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear");
    for n in [9, 17, 33] {
        let grid = cube(n);
        let h = BoundaryData::constant(&grid, 0.05);
        group.bench_with_input(BenchmarkId::new("lifting", n), &h, |b, h| b.iter(|| solve_chi(h, 1e-10).unwrap()));
        let lift = flux_lifting(&grid);
        let u = bump(&grid);
        group.bench_with_input(BenchmarkId::new("phi_u", n), &u, |b, u| {
            b.iter(|| compute_phi_u(u, &lift, 0.1, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn functional(c: &mut Criterion) {
    let grid = cube(17);
    let lift = dipole_lifting(&grid);
    let nl = Nonlinearity::power(4.0).unwrap();
    let u = bump(&grid);
    let mut f = ReducedFunctional::new(&lift, params(), nl, 1e-10).unwrap();
    c.bench_function("evaluate_j_g/17 warm", |b| b.iter(|| f.evaluate(&u).unwrap()));
}

fn spectrum(c: &mut Criterion) {
    let grid = cube(17);
    c.bench_function("lambda_k/17 k=4", |b| b.iter(|| lambda_k(&grid, 4, 1e-8).unwrap()));
}

fn critical_points(c: &mut Criterion) {
    let mut group = c.benchmark_group("critical");
    group.sample_size(10);
    let grid = cube(17);
    let flux = flux_lifting(&grid);
    let u0 = bump(&grid);
    group.bench_function("minimize_j/17", |b| {
        b.iter(|| minimize_j(&flux, &params(), &u0, &DescentOptions::default()).unwrap())
    });
    let dipole = dipole_lifting(&grid);
    let nl = Nonlinearity::power(4.0).unwrap();
    group.bench_function("mountain_pass/17", |b| {
        b.iter(|| mountain_pass(&nl, &dipole, &params(), &MountainPassOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, linear_solves, functional, spectrum, critical_points);
criterion_main!(benches);
