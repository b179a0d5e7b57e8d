use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vnotch_core::assembly::Assembler;
use vnotch_core::constitutive::MaterialRegistry;
use vnotch_core::geometry::{build_vc_boundary, BoundaryData, GeometryParams};
use vnotch_core::mesh::{estimate_error, generate_mesh, MeshOptions};
use vnotch_core::par::Execution;
use vnotch_core::solver::{Newton, NewtonConfig};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kernels(c: &mut Criterion) {
    let boundary = Arc::new(build_vc_boundary(GeometryParams::from_degrees(90.0, 0.01).unwrap()).unwrap());
    let mesh = Arc::new(generate_mesh(boundary, &MeshOptions::standard(0.01)).unwrap());
    let data = BoundaryData::default();
    let model = MaterialRegistry::get("NLB2").unwrap();
    let base = Assembler::new(mesh.clone(), &data).unwrap();
    let field = Newton::new(&base, &model, &data, &NewtonConfig::default())
        .unwrap()
        .linear_solution()
        .unwrap();
    let jacobian = base.jacobian(&field, &model).unwrap();
    let x: Vec<f64> = (0..jacobian.n()).map(|i| (i as f64).sin()).collect();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        let asm = Assembler::new(mesh.clone(), &data).unwrap().with_execution(exec);
        group.bench_with_input(BenchmarkId::new("residual", name), &exec, |b, _| {
            b.iter(|| black_box(asm.residual(&field, &model).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("jacobian", name), &exec, |b, _| {
            b.iter(|| black_box(asm.jacobian(&field, &model).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("matvec", name), &exec, |b, &exec| {
            let mut y = vec![0.0; x.len()];
            b.iter(|| {
                jacobian.mul_vec(&x, &mut y, exec);
                black_box(y[0])
            })
        });
        group.bench_with_input(BenchmarkId::new("estimator", name), &exec, |b, &exec| {
            b.iter(|| black_box(estimate_error(&mesh, field.coefficients(), exec).unwrap()))
        });
    }
    group.finish();
}

fn newton(c: &mut Criterion) {
    let boundary = Arc::new(build_vc_boundary(GeometryParams::from_degrees(90.0, 0.01).unwrap()).unwrap());
    let mesh = Arc::new(generate_mesh(boundary, &MeshOptions::half_resolution(0.01)).unwrap());
    let data = BoundaryData::default();
    let model = MaterialRegistry::get("NLS2").unwrap();
    let mut group = c.benchmark_group("newton");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let asm = Assembler::new(mesh.clone(), &data).unwrap().with_execution(exec);
        group.bench_function(BenchmarkId::new("NLS2", name), |b| {
            b.iter(|| {
                let newton = Newton::new(&asm, &model, &data, &NewtonConfig::default()).unwrap();
                black_box(newton.solve(None).unwrap().1.iterations)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, newton);
criterion_main!(benches);
