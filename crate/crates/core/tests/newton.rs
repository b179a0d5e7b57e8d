mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use vnotch_core::adaptive::{build_hierarchy, solve_on_hierarchy, AdaptiveOptions, Hierarchy};
use vnotch_core::assembly::{Assembler, DiscreteField};
use vnotch_core::constitutive::{MaterialModel, MaterialRegistry};
use vnotch_core::fe::{QuadratureRule, DEGREE6};
use vnotch_core::geometry::BoundaryData;
use vnotch_core::mesh::{refine, Mesh, MeshOptions};
use vnotch_core::par::Execution;
use vnotch_core::postprocess::relative_error_norm;
use vnotch_core::solver::{solve_linear_spd, solve_newton, InitialGuess, Newton, NewtonConfig, SolveReport};

use common::*;

fn data() -> BoundaryData {
    BoundaryData::default()
}

fn uniform(mesh: &Arc<Mesh>, times: usize) -> Arc<Mesh> {
    let mut m = mesh.clone();
    for _ in 0..times {
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        m = Arc::new(refine(&m, &all).unwrap());
    }
    m
}

fn assert_decreasing(r: &SolveReport) {
    assert!(r.converged);
    for w in r.residual_history.windows(2) {
        assert!(w[1] < w[0], "{:?}", r.residual_history);
    }
}

#[test]
fn pcg_matches_dense_cholesky() {
    let m = uniform(&mesh(180.0, 0.01, &MeshOptions::new(0.25, 0.25)), 2);
    let asm = Assembler::new(m.clone(), &data()).unwrap();
    let j = asm.jacobian(&asm.lift(), &MaterialRegistry::get("LIN2").unwrap()).unwrap();
    assert!(j.n() < 2000);
    let mut r = rng(3);
    let b: Vec<f64> = (0..j.n()).map(|_| r.random_range(-1.0..1.0)).collect();
    let (x, info) = solve_linear_spd(&j, &b, 1e-12, Execution::Sequential).unwrap();
    assert!(!info.dense_fallback);
    assert!(info.relative_residual <= 1e-10);

    let d = DMatrix::from_fn(j.n(), j.n(), |a, c| j.get(a, c));
    let oracle = d.cholesky().unwrap().solve(&DVector::from_vec(b));
    let diff = (DVector::from_vec(x) - &oracle).norm() / oracle.norm();
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn hooke_takes_one_step() {
    let m = coarse_mesh(90.0, 0.01);
    let (_, report) = solve_newton(&m, &data(), &MaterialRegistry::get("LIN1").unwrap(), &NewtonConfig::default()).unwrap();
    assert_eq!(report.iterations, 1);
    assert_decreasing(&report);
}

#[test]
fn quadratic_exponent_reduces_to_hooke() {
    let m = coarse_mesh(90.0, 0.01);
    let cfg = NewtonConfig::default();
    let pl = MaterialModel::power_law(20.2e9, 0.5e9, 2.0).unwrap();
    let (a, ra) = solve_newton(&m, &data(), &pl, &cfg).unwrap();
    let (b, _) = solve_newton(&m, &data(), &MaterialModel::hooke(20.2e9).unwrap(), &cfg).unwrap();
    assert_eq!(ra.iterations, 1);
    assert!(relative_error_norm(&a, &b).unwrap() < 1e-10);
}

#[test]
fn strain_limiting_registry_model_on_level_two() {
    let opts = AdaptiveOptions::new(MeshOptions::new(0.1, 0.005), 2);
    let h = build_hierarchy(boundary(90.0, 0.01), &opts).unwrap();
    let (_, report) = solve_newton(&h.meshes[2], &data(), &MaterialRegistry::get("NLS3").unwrap(), &NewtonConfig::default()).unwrap();
    assert_decreasing(&report);
    assert!(report.iterations <= 30, "{}", report.iterations);
    assert_eq!(report.damping_history.len(), report.iterations);
    assert_eq!(report.linear_iters.len(), report.iterations);
}

#[test]
fn cold_lift_start_recovers_through_restart_or_damping() {
    let m = coarse_mesh(90.0, 0.01);
    let cfg = NewtonConfig {
        initial_guess: InitialGuess::Lift,
        ..NewtonConfig::default()
    };
    let model = MaterialRegistry::get("NLB2").unwrap();
    let (a, r) = solve_newton(&m, &data(), &model, &cfg).unwrap();
    assert_decreasing(&r);
    let (b, _) = solve_newton(&m, &data(), &model, &NewtonConfig::default()).unwrap();
    assert!(relative_error_norm(&a, &b).unwrap() < 1e-9);
}

#[test]
fn power_law_tail_is_superlinear() {
    let m = coarse_mesh(90.0, 0.01);
    for name in ["NLB1", "NLB2", "NLB3"] {
        let (_, r) = solve_newton(&m, &data(), &MaterialRegistry::get(name).unwrap(), &NewtonConfig::default()).unwrap();
        assert!(r.iterations >= 2, "{name}: {r:?}");
        let h: Vec<f64> = r.residual_history.iter().map(|x| x / r.residual_scale).collect();
        let n = h.len();
        assert!(h[n - 1] <= 10.0 * h[n - 2].powf(1.5), "{name}: {h:?}");
    }
}

#[test]
fn warm_starts_need_few_iterations() {
    let opts = AdaptiveOptions::new(MeshOptions::half_resolution(0.01), 2);
    let h = build_hierarchy(boundary(100.0, 0.01), &opts).unwrap();
    for entry in MaterialRegistry::entries() {
        let sol = solve_on_hierarchy(&h, &entry.model, &NewtonConfig::default()).unwrap();
        for r in &sol.reports[1..] {
            assert!(r.iterations <= 5, "{}: {:?}", entry.name, r.residual_history);
        }
    }
}

#[test]
fn galerkin_residual_below_tolerance_after_convergence() {
    let m = coarse_mesh(60.0, 0.01);
    let model = MaterialRegistry::get("NLS2").unwrap();
    let (a, r) = solve_newton(&m, &data(), &model, &NewtonConfig::default()).unwrap();
    let asm = Assembler::new(m.clone(), &data()).unwrap();
    let res = asm.residual(&a, &model).unwrap();
    let free: Vec<f64> = (0..res.len()).filter(|&i| !asm.dirichlet().is_dirichlet(i)).map(|i| res[i]).collect();
    let norm = (free.iter().map(|x| x * x).sum::<f64>() / free.len() as f64).sqrt();
    assert!((norm - r.residual_history.last().unwrap()).abs() <= 1e-12 * r.residual_scale);
    let cfg = NewtonConfig::default();
    assert!(norm <= (cfg.abs_tol * r.residual_scale).max(cfg.rel_tol * r.reference_residual));
}

fn level_errors(h: &Hierarchy, model: &MaterialModel, rule: Option<QuadratureRule>) -> Vec<f64> {
    let cfg = NewtonConfig::default();
    let mut fields: Vec<DiscreteField> = Vec::new();
    for m in &h.meshes {
        let mut asm = Assembler::new(m.clone(), &data()).unwrap();
        if let Some(rule) = rule {
            asm = asm.with_rule(rule);
        }
        let initial = fields.last().map(|f| f.prolongate(m).unwrap());
        let (f, _) = Newton::new(&asm, model, &data(), &cfg).unwrap().solve(initial).unwrap();
        fields.push(f);
    }
    let finest = fields.last().unwrap();
    fields.iter().map(|f| relative_error_norm(f, finest).unwrap()).collect()
}

#[test]
fn higher_quadrature_barely_moves_reported_norms() {
    let opts = AdaptiveOptions::new(MeshOptions::half_resolution(0.01), 2);
    let h = build_hierarchy(boundary(90.0, 0.01), &opts).unwrap();
    for name in ["NLB2", "NLS3"] {
        let model = MaterialRegistry::get(name).unwrap();
        let e4 = level_errors(&h, &model, None);
        let e6 = level_errors(&h, &model, Some(DEGREE6));
        for (a, b) in e4.iter().zip(&e6) {
            assert!((a - b).abs() < 1e-6, "{name}: {e4:?} vs {e6:?}");
        }
    }
}

#[test]
fn sequential_solves_are_bitwise_repeatable() {
    let m = coarse_mesh(120.0, 0.05);
    let model = MaterialRegistry::get("NLB3").unwrap();
    let run = || {
        let asm = Assembler::new(m.clone(), &data()).unwrap().with_execution(Execution::Sequential);
        Newton::new(&asm, &model, &data(), &NewtonConfig::default()).unwrap().solve(None).unwrap()
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(ra, rb);
    assert_eq!(a.coefficients(), b.coefficients());
}

#[test]
fn parallel_and_sequential_agree() {
    let m = coarse_mesh(120.0, 0.05);
    let model = MaterialRegistry::get("NLS1").unwrap();
    let solve = |exec| {
        let asm = Assembler::new(m.clone(), &data()).unwrap().with_execution(exec);
        Newton::new(&asm, &model, &data(), &NewtonConfig::default()).unwrap().solve(None).unwrap().0
    };
    let a: DiscreteField = solve(Execution::Sequential);
    let b = solve(Execution::Parallel);
    assert!(relative_error_norm(&a, &b).unwrap() < 1e-10);
}
