//! P2 fields and assembly of the weak form `int sigma(|grad A|) grad A . grad phi = 0`.

use std::sync::Arc;

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::fe::{gradient_of, value_of, ElementGeometry, QuadratureRule, DEGREE4, P2_NODES};
use crate::geometry::{BoundaryData, Point};
use crate::mesh::{Mesh, NO_TRIANGLE};
use crate::par::Execution;
use crate::sparse::CsrMatrix;

/// Continuous piecewise-quadratic scalar field on a mesh, in Pa m.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    mesh: Arc<Mesh>,
    coefficients: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: Arc<Mesh>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != mesh.n_dofs() {
            return Err(Error::Domain(format!(
                "{} coefficients for a mesh with {} P2 DOFs",
                coefficients.len(),
                mesh.n_dofs()
            )));
        }
        Ok(DiscreteField { mesh, coefficients })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_dofs();
        DiscreteField {
            mesh,
            coefficients: vec![0.0; n],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let coefficients = mesh.dof_points().into_iter().map(f).collect();
        DiscreteField { mesh, coefficients }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    #[inline]
    pub fn local(&self, t: usize) -> [f64; 6] {
        self.mesh.element_dofs(t).map(|d| self.coefficients[d])
    }

    /// Gradient inside triangle `t` at barycentric point `l`.
    #[inline]
    pub fn gradient_in(&self, t: usize, geom: &ElementGeometry, l: [f64; 3]) -> [f64; 2] {
        gradient_of(&self.local(t), &geom.grad_lambda, l)
    }

    fn locate(&self, p: Point) -> Result<(usize, [f64; 3])> {
        self.mesh.locator().locate(p).ok_or_else(|| {
            Error::Domain(format!("point ({}, {}) lies outside the mesh", p[0], p[1]))
        })
    }

    pub fn value_at(&self, p: Point) -> Result<f64> {
        let (t, l) = self.locate(p)?;
        Ok(value_of(&self.local(t), l))
    }

    /// Gradient from the lowest-index triangle containing `p`.
    pub fn gradient_at(&self, p: Point) -> Result<[f64; 2]> {
        let (t, l) = self.locate(p)?;
        Ok(self.gradient_in(t, &self.mesh.element(t), l))
    }

    /// Evaluates this field at the P2 nodes of `fine`, which must descend from
    /// this field's mesh. Each fine triangle uses the polynomial of its
    /// ancestor; shared nodes take the value from the lowest-index triangle.
    pub fn prolongate(&self, fine: &Arc<Mesh>) -> Result<DiscreteField> {
        if !fine.descends_from(&self.mesh) {
            return Err(Error::Domain(
                "target mesh is not a refinement of the field's mesh".into(),
            ));
        }
        if Arc::ptr_eq(fine, &self.mesh) {
            return Ok(self.clone());
        }
        let mut out = vec![0.0; fine.n_dofs()];
        let mut set = vec![false; fine.n_dofs()];
        for t in 0..fine.n_triangles() {
            let a = fine
                .ancestor_in(&self.mesh, t)
                .ok_or_else(|| Error::Domain(format!("fine triangle {t} has no ancestor")))?;
            let coarse = self.mesh.element(a);
            let c = self.local(a);
            let g = fine.element(t);
            for (k, d) in fine.element_dofs(t).into_iter().enumerate() {
                if !set[d] {
                    set[d] = true;
                    out[d] = value_of(&c, coarse.barycentric(g.point_at(P2_NODES[k])));
                }
            }
        }
        DiscreteField::new(fine.clone(), out)
    }
}

/// Prescribed boundary DOFs and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
    mask: Vec<bool>,
}

impl DirichletData {
    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.mask[dof]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_free(&self) -> usize {
        self.mask.len() - self.dofs.len()
    }

    pub fn apply(&self, coefficients: &mut [f64]) {
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            coefficients[d] = v;
        }
    }
}

/// Assigns `A0` to every boundary vertex and edge-midpoint DOF, using the tag
/// of the boundary edge the DOF lies on.
pub fn interpolate_dirichlet(mesh: &Mesh, data: &BoundaryData) -> Result<DirichletData> {
    for e in 0..mesh.edges().len() {
        if mesh.edge_triangles(e)[1] == NO_TRIANGLE && !mesh.is_boundary_edge(e) {
            let [a, b] = mesh.edges()[e];
            return Err(Error::Data(format!("boundary edge ({a}, {b}) carries no tag")));
        }
    }
    let points = mesh.dof_points();
    let mut dofs = Vec::new();
    let mut values = Vec::new();
    let mut mask = vec![false; mesh.n_dofs()];
    for (d, be) in mesh.boundary_dofs() {
        dofs.push(d);
        values.push(data.value_on(be.tag, points[d]));
        mask[d] = true;
    }
    Ok(DirichletData { dofs, values, mask })
}

/// Output of [`Assembler::system`].
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub jacobian: CsrMatrix,
    pub dirichlet_dofs: Vec<usize>,
    pub dirichlet_values: Vec<f64>,
}

/// Per-mesh assembly context: DOF sparsity pattern, scatter positions and
/// Dirichlet data.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: Arc<Mesh>,
    geometry: Vec<ElementGeometry>,
    pattern: CsrMatrix,
    positions: Vec<[usize; 36]>,
    dirichlet: DirichletData,
    rule: QuadratureRule,
    exec: Execution,
}

impl Assembler {
    pub fn new(mesh: Arc<Mesh>, data: &BoundaryData) -> Result<Self> {
        let geometry: Vec<ElementGeometry> = (0..mesh.n_triangles()).map(|t| mesh.element(t)).collect();
        for (t, g) in geometry.iter().enumerate() {
            if !(g.area > 0.0) || !g.grad_lambda.iter().flatten().all(|x| x.is_finite()) {
                return Err(Error::Mesh(format!("degenerate triangle {t} (area {:e})", g.area)));
            }
        }
        let n = mesh.n_dofs();
        let mut rows = vec![Vec::new(); n];
        for t in 0..mesh.n_triangles() {
            let d = mesh.element_dofs(t);
            for &i in &d {
                rows[i].extend_from_slice(&d);
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(&rows)?;
        let positions = (0..mesh.n_triangles())
            .map(|t| {
                let d = mesh.element_dofs(t);
                let mut p = [0; 36];
                for i in 0..6 {
                    for j in 0..6 {
                        p[6 * i + j] = pattern.position(d[i], d[j]).expect("pattern covers element");
                    }
                }
                p
            })
            .collect();
        let dirichlet = interpolate_dirichlet(&mesh, data)?;
        Ok(Assembler {
            mesh,
            geometry,
            pattern,
            positions,
            dirichlet,
            rule: DEGREE4,
            exec: Execution::default(),
        })
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn dirichlet(&self) -> &DirichletData {
        &self.dirichlet
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Field equal to `A0` on the boundary and zero inside.
    pub fn lift(&self) -> DiscreteField {
        let mut f = DiscreteField::zeros(self.mesh.clone());
        self.dirichlet.apply(&mut f.coefficients);
        f
    }

    pub fn impose_dirichlet(&self, field: &mut DiscreteField) {
        self.dirichlet.apply(&mut field.coefficients);
    }

    fn check_field(&self, field: &DiscreteField) -> Result<()> {
        if !Arc::ptr_eq(&field.mesh, &self.mesh) {
            return Err(Error::Domain("field lives on a different mesh than the assembler".into()));
        }
        Ok(())
    }

    fn local_residual(&self, field: &DiscreteField, model: &MaterialModel, t: usize) -> [f64; 6] {
        let g = &self.geometry[t];
        let c = field.local(t);
        let mut r = [0.0; 6];
        for &(l, w) in self.rule.points {
            let grads = crate::fe::p2_gradients(&g.grad_lambda, l);
            let ga = combine(&c, &grads);
            let s = model.sigma_at(ga[0].hypot(ga[1])) * w * g.area;
            for i in 0..6 {
                r[i] += s * (ga[0] * grads[i][0] + ga[1] * grads[i][1]);
            }
        }
        r
    }

    fn local_jacobian(&self, field: &DiscreteField, model: &MaterialModel, t: usize) -> [f64; 36] {
        let g = &self.geometry[t];
        let c = field.local(t);
        let mut k = [0.0; 36];
        for &(l, w) in self.rule.points {
            let grads = crate::fe::p2_gradients(&g.grad_lambda, l);
            let ga = combine(&c, &grads);
            let tm = ga[0].hypot(ga[1]);
            let s = model.sigma_at(tm) * w * g.area;
            let d = model.sigma_prime_over_t_at(tm) * w * g.area;
            let proj: [f64; 6] = std::array::from_fn(|i| ga[0] * grads[i][0] + ga[1] * grads[i][1]);
            for i in 0..6 {
                for j in 0..6 {
                    let lap = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
                    k[6 * i + j] += s * lap + d * proj[i] * proj[j];
                }
            }
        }
        k
    }

    /// Weak-form residual; entries at Dirichlet DOFs are zero.
    pub fn residual(&self, field: &DiscreteField, model: &MaterialModel) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let locals = self
            .exec
            .map_range(self.mesh.n_triangles(), |t| self.local_residual(field, model, t));
        let mut r = vec![0.0; self.n_dofs()];
        for (t, loc) in locals.iter().enumerate() {
            for (d, v) in self.mesh.element_dofs(t).into_iter().zip(loc) {
                r[d] += v;
            }
        }
        for &d in &self.dirichlet.dofs {
            r[d] = 0.0;
        }
        Ok(r)
    }

    /// Jacobian of [`Assembler::residual`] with Dirichlet rows and columns
    /// replaced by the identity.
    pub fn jacobian(&self, field: &DiscreteField, model: &MaterialModel) -> Result<CsrMatrix> {
        self.check_field(field)?;
        let mut m = self.raw_jacobian(field, model);
        self.eliminate(&mut m);
        Ok(m)
    }

    /// Jacobian without boundary elimination.
    pub fn raw_jacobian(&self, field: &DiscreteField, model: &MaterialModel) -> CsrMatrix {
        let locals = self
            .exec
            .map_range(self.mesh.n_triangles(), |t| self.local_jacobian(field, model, t));
        let mut m = self.pattern.clone();
        let vals = m.values_mut();
        for (pos, loc) in self.positions.iter().zip(&locals) {
            for k in 0..36 {
                vals[pos[k]] += loc[k];
            }
        }
        m
    }

    fn eliminate(&self, m: &mut CsrMatrix) {
        let mask = &self.dirichlet.mask;
        let n = m.n();
        let row_ptr = m.row_ptr().to_vec();
        let cols = m.col_idx().to_vec();
        let vals = m.values_mut();
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[p];
                if mask[i] || mask[j] {
                    vals[p] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
    }

    pub fn system(&self, field: &DiscreteField, model: &MaterialModel) -> Result<AssembledSystem> {
        Ok(AssembledSystem {
            residual: self.residual(field, model)?,
            jacobian: self.jacobian(field, model)?,
            dirichlet_dofs: self.dirichlet.dofs.clone(),
            dirichlet_values: self.dirichlet.values.clone(),
        })
    }
}

#[inline]
fn combine(c: &[f64; 6], grads: &[[f64; 2]; 6]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for i in 0..6 {
        g[0] += c[i] * grads[i][0];
        g[1] += c[i] * grads[i][1];
    }
    g
}

/// Residual with the mesh's own Dirichlet DOFs zeroed, using the default
/// quadrature.
pub fn assemble_residual(field: &DiscreteField, model: &MaterialModel) -> Result<Vec<f64>> {
    Assembler::new(field.mesh.clone(), &BoundaryData::default())?.residual(field, model)
}

pub fn assemble_jacobian(field: &DiscreteField, model: &MaterialModel) -> Result<CsrMatrix> {
    Assembler::new(field.mesh.clone(), &BoundaryData::default())?.jacobian(field, model)
}
