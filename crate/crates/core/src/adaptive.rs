//! Nested adaptive mesh hierarchies and solves along them.

use std::sync::Arc;

use crate::assembly::{Assembler, DiscreteField};
use crate::constitutive::MaterialModel;
use crate::error::Result;
use crate::geometry::{BoundaryData, VCBoundary};
use crate::mesh::{dorfler_mark, estimate_error, generate_mesh, refine, Mesh, MeshOptions};
use crate::par::Execution;
use crate::postprocess::relative_error_norm;
use crate::solver::{Newton, NewtonConfig, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Number of refinement steps; the hierarchy has `refinements + 1` levels.
    pub refinements: usize,
    /// Doerfler bulk fraction.
    pub theta: f64,
    pub mesh: MeshOptions,
    pub data: BoundaryData,
    pub exec: Execution,
}

impl AdaptiveOptions {
    pub fn new(mesh: MeshOptions, refinements: usize) -> Self {
        AdaptiveOptions {
            refinements,
            theta: 0.5,
            mesh,
            data: BoundaryData::default(),
            exec: Execution::default(),
        }
    }
}

/// Meshes of one geometry, refined by the residual indicator of the linear
/// problem.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub meshes: Vec<Arc<Mesh>>,
    /// Linear solution on every level (the same for every Hooke modulus).
    pub linear: Vec<DiscreteField>,
    /// `sqrt(sum eta_T^2)` of the linear solution per level.
    pub estimates: Vec<f64>,
    pub data: BoundaryData,
    pub exec: Execution,
}

/// Compliance-one linear model; its Airy solution is shared by all Hooke models.
fn unit_linear() -> MaterialModel {
    MaterialModel::Hooke { mu_l: 0.5 }
}

pub fn build_hierarchy(boundary: Arc<VCBoundary>, options: &AdaptiveOptions) -> Result<Hierarchy> {
    let mut mesh = Arc::new(generate_mesh(boundary, &options.mesh)?);
    let mut meshes = Vec::new();
    let mut linear = Vec::new();
    let mut estimates = Vec::new();
    let config = NewtonConfig::default();
    for level in 0..=options.refinements {
        let assembler = Assembler::new(mesh.clone(), &options.data)?.with_execution(options.exec);
        let newton = Newton::new(&assembler, &unit_linear(), &options.data, &config)?;
        let field = newton.linear_solution()?;
        let eta = estimate_error(&mesh, field.coefficients(), options.exec)?;
        estimates.push(eta.iter().map(|e| e * e).sum::<f64>().sqrt());
        meshes.push(mesh.clone());
        linear.push(field);
        if level < options.refinements {
            let marked = dorfler_mark(&eta, options.theta);
            mesh = Arc::new(refine(&mesh, &marked)?);
        }
    }
    Ok(Hierarchy {
        meshes,
        linear,
        estimates,
        data: options.data,
        exec: options.exec,
    })
}

/// Solution and Newton report on every level of a hierarchy.
#[derive(Debug, Clone)]
pub struct LevelSolutions {
    pub fields: Vec<DiscreteField>,
    pub reports: Vec<SolveReport>,
}

impl LevelSolutions {
    /// Relative `W^{1,2}` error of every level against the finest one.
    pub fn relative_errors(&self) -> Result<Vec<f64>> {
        let reference = self.fields.last().expect("nonempty hierarchy");
        self.fields.iter().map(|f| relative_error_norm(f, reference)).collect()
    }
}

/// Solves `model` on every level, warm-starting each level from the
/// prolongated solution of the previous one.
pub fn solve_on_hierarchy(h: &Hierarchy, model: &MaterialModel, config: &NewtonConfig) -> Result<LevelSolutions> {
    let mut fields: Vec<DiscreteField> = Vec::with_capacity(h.meshes.len());
    let mut reports = Vec::with_capacity(h.meshes.len());
    for (level, mesh) in h.meshes.iter().enumerate() {
        let assembler = Assembler::new(mesh.clone(), &h.data)?.with_execution(h.exec);
        let newton = Newton::new(&assembler, model, &h.data, config)?;
        let initial = match fields.last() {
            Some(prev) => Some(prev.prolongate(mesh)?),
            None if model.is_linear() => Some(h.linear[level].clone()),
            None => None,
        };
        let (field, report) = newton.solve(initial)?;
        fields.push(field);
        reports.push(report);
    }
    Ok(LevelSolutions { fields, reports })
}
