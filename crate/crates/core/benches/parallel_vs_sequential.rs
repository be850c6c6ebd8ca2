use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chemovar::domain::build_builtin;
use chemovar::energy::{energy, residual_vector};
use chemovar::solver::{solve, SolveOptions};
use chemovar::spectrum::{assemble, eigenpairs};
use chemovar::testfn::{lambda_grid, probe_join_points};
use chemovar::{Builtin, Exec, FeSpace, Parameters};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn assembly(c: &mut Criterion) {
    let mesh = build_builtin(Builtin::Disk, 256).unwrap();
    let mut g = c.benchmark_group("assemble");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| assemble(&mesh, exec).unwrap()));
    }
    g.finish();
}

fn functional(c: &mut Criterion) {
    let mesh = Arc::new(build_builtin(Builtin::Disk, 256).unwrap());
    let p = Parameters::new(-5.0, 13.0);
    let mut g = c.benchmark_group("energy_and_residual");
    for (name, exec) in POLICIES {
        let s = FeSpace::new(Arc::clone(&mesh), exec).unwrap();
        let u = s.field(mesh.vertices().iter().map(|v| (3.0 * v[0]).sin() + v[1] * v[1]).collect()).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| (energy(&s, &u, p).unwrap(), residual_vector(&s, &u, p).unwrap()))
        });
    }
    g.finish();
}

fn lambda_table(c: &mut Criterion) {
    let mesh = Arc::new(build_builtin(Builtin::Disk, 128).unwrap());
    let grid = [10.0, 20.0, 40.0, 80.0];
    let p = Parameters::new(-5.0, 13.0);
    let mut g = c.benchmark_group("lambda_grid");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let basis = eigenpairs(Arc::new(FeSpace::new(Arc::clone(&mesh), exec).unwrap()), 4).unwrap();
        let joins = probe_join_points(&mesh);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(&joins, |z| lambda_grid(z, &grid, &basis, p).unwrap()))
        });
    }
    g.finish();
}

fn seed_search(c: &mut Criterion) {
    let mesh = Arc::new(build_builtin(Builtin::Disk, 64).unwrap());
    let p = Parameters::new(-2.0, 5.0);
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let basis = eigenpairs(Arc::new(FeSpace::new(Arc::clone(&mesh), exec).unwrap()), 8).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve(&basis, p, &SolveOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, functional, lambda_table, seed_search);
criterion_main!(benches);
