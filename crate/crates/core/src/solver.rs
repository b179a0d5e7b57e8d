//! Linear SPD solves and damped Newton iteration for the discrete problem.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, DiscreteField};
use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::geometry::BoundaryData;
use crate::mesh::Mesh;
use crate::par::Execution;
use crate::sparse::CsrMatrix;

/// Systems below this size fall back to a dense Cholesky solve when CG fails.
pub const DENSE_FALLBACK_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveInfo {
    pub iterations: usize,
    /// Final `||A x - b|| / ||b||`.
    pub relative_residual: f64,
    pub dense_fallback: bool,
}

/// Preconditioned conjugate gradients with a Jacobi preconditioner. Returns
/// `x` with `||A x - b|| <= tol ||b||`.
pub fn solve_linear_spd(matrix: &CsrMatrix, rhs: &[f64], tol: f64, exec: Execution) -> Result<(Vec<f64>, LinearSolveInfo)> {
    let max_iter = (10 * matrix.n()).clamp(100, 100_000);
    match pcg(matrix, rhs, tol, max_iter, exec) {
        Ok(out) => Ok(out),
        Err(e) if matrix.n() < DENSE_FALLBACK_LIMIT => {
            let x = solve_dense_spd(matrix, rhs).map_err(|_| e)?;
            let rel = relative_residual(matrix, &x, rhs, exec);
            Ok((
                x,
                LinearSolveInfo {
                    iterations: max_iter,
                    relative_residual: rel,
                    dense_fallback: true,
                },
            ))
        }
        Err(e) => Err(e),
    }
}

fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64], exec: Execution) -> f64 {
    let mut ax = vec![0.0; x.len()];
    matrix.mul_vec(x, &mut ax, exec);
    let bn = exec.norm2(b);
    let rn = exec.sum(b.len(), |i| (b[i] - ax[i]) * (b[i] - ax[i])).sqrt();
    if bn > 0.0 {
        rn / bn
    } else {
        rn
    }
}

/// Jacobi-preconditioned CG from a zero initial guess.
pub fn pcg(matrix: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize, exec: Execution) -> Result<(Vec<f64>, LinearSolveInfo)> {
    let n = matrix.n();
    if b.len() != n {
        return Err(Error::Domain(format!("rhs length {} for a {n}x{n} matrix", b.len())));
    }
    let diag = matrix.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Domain(format!("matrix is not SPD: diagonal entry {i} is {}", diag[i])));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let bnorm = exec.norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, LinearSolveInfo { iterations: 0, relative_residual: 0.0, dense_fallback: false }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = exec.map_range(n, |i| inv[i] * r[i]);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = exec.dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        matrix.mul_vec(&p, &mut ap, exec);
        let pap = exec.dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolver { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        exec.axpy(alpha, &p, &mut x);
        exec.axpy(-alpha, &ap, &mut r);
        rel = exec.norm2(&r) / bnorm;
        if rel <= tol {
            let true_rel = relative_residual(matrix, &x, b, exec);
            if true_rel <= 10.0 * tol {
                return Ok((x, LinearSolveInfo { iterations: it, relative_residual: true_rel, dense_fallback: false }));
            }
            // Recurrence drifted; restart from the current iterate.
            let mut ax = vec![0.0; n];
            matrix.mul_vec(&x, &mut ax, exec);
            exec.fill(&mut r, |i| b[i] - ax[i]);
        }
        exec.fill(&mut z, |i| inv[i] * r[i]);
        let rz_new = exec.dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        exec.for_each_mut(&mut p, |i, pi| *pi = z[i] + beta * *pi);
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: rel })
}

/// Dense Cholesky solve; intended for small systems and as a fallback.
pub fn solve_dense_spd(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.n();
    let mut l = matrix.to_dense();
    for j in 0..n {
        let mut d = l[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return Err(Error::LinearSolver { iterations: j, residual: f64::NAN });
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let mut s = l[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    Ok(y)
}

/// Starting point of the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `Lift` for linear models, `Linear` otherwise.
    Auto,
    /// Dirichlet values on the boundary, zero inside.
    Lift,
    /// Solution of the linear problem with the small-stress compliance of the
    /// model.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Absolute tolerance on the residual norm, in units of `sigma(F) F`.
    pub abs_tol: f64,
    /// Tolerance relative to the residual norm of the first iterate.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    /// Smallest accepted step length.
    pub min_step: f64,
    /// Relative tolerance of the inner CG solves.
    pub linear_tol: f64,
    pub initial_guess: InitialGuess,
    /// Retry from the linear solution when the lift start fails.
    pub fallback_to_linear: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iters: 50,
            backtrack: 0.5,
            min_step: 2f64.powi(-20),
            linear_tol: 1e-12,
            initial_guess: InitialGuess::Auto,
            fallback_to_linear: true,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::ParameterDomain(what.to_string()));
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.linear_tol > 0.0) {
            return bad("Newton tolerances must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return bad("min_step must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Residual norm `||r_free|| / sqrt(n_free)`, one entry per iterate.
    pub residual_history: Vec<f64>,
    pub damping_history: Vec<f64>,
    pub linear_iters: Vec<usize>,
    pub converged: bool,
    /// Residual norm of the first iterate, the reference for `rel_tol`.
    pub reference_residual: f64,
    /// `sigma(F) F`, the unit of `abs_tol`.
    pub residual_scale: f64,
    pub restarted_from_linear: bool,
}

/// Solves the nonlinear problem on `mesh` from the configured initial guess.
pub fn solve_newton(
    mesh: &Arc<Mesh>,
    data: &BoundaryData,
    model: &MaterialModel,
    config: &NewtonConfig,
) -> Result<(DiscreteField, SolveReport)> {
    let assembler = Assembler::new(mesh.clone(), data)?;
    Newton::new(&assembler, model, data, config)?.solve(None)
}

/// Newton driver bound to one assembler and model.
pub struct Newton<'a> {
    assembler: &'a Assembler,
    model: MaterialModel,
    config: NewtonConfig,
    scale: f64,
}

impl<'a> Newton<'a> {
    pub fn new(assembler: &'a Assembler, model: &MaterialModel, data: &BoundaryData, config: &NewtonConfig) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        let f = data.traction.abs().max(f64::MIN_POSITIVE);
        Ok(Newton {
            assembler,
            model: *model,
            config: *config,
            scale: model.sigma_at(f) * f,
        })
    }

    fn residual_norm(&self, r: &[f64]) -> f64 {
        let d = self.assembler.dirichlet();
        let n = d.n_free().max(1);
        let exec = self.assembler.execution();
        let s = exec.sum(r.len(), |i| if d.is_dirichlet(i) { 0.0 } else { r[i] * r[i] });
        (s / n as f64).sqrt()
    }

    /// Solution of the linear problem with compliance `sigma(0)`.
    pub fn linear_solution(&self) -> Result<DiscreteField> {
        let lift = self.assembler.lift();
        let linear = MaterialModel::Hooke { mu_l: 0.5 / self.model.sigma_at(0.0) };
        let r = self.assembler.residual(&lift, &linear)?;
        let j = self.assembler.jacobian(&lift, &linear)?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let (dx, _) = solve_linear_spd(&j, &rhs, self.config.linear_tol, self.assembler.execution())?;
        let mut out = lift;
        for (c, d) in out.coefficients_mut().iter_mut().zip(dx) {
            *c += d;
        }
        self.assembler.impose_dirichlet(&mut out);
        Ok(out)
    }

    /// Runs the iteration from `initial` (with Dirichlet values re-imposed),
    /// or from the configured initial guess when `None`.
    pub fn solve(&self, initial: Option<DiscreteField>) -> Result<(DiscreteField, SolveReport)> {
        let explicit = initial.is_some();
        let guess = match self.config.initial_guess {
            InitialGuess::Auto if self.model.is_linear() => InitialGuess::Lift,
            InitialGuess::Auto => InitialGuess::Linear,
            g => g,
        };
        let start = match initial {
            Some(mut f) => {
                if !Arc::ptr_eq(f.mesh(), self.assembler.mesh()) {
                    return Err(Error::Domain("initial guess lives on a different mesh".into()));
                }
                self.assembler.impose_dirichlet(&mut f);
                f
            }
            None => match guess {
                InitialGuess::Linear => self.linear_solution()?,
                _ => self.assembler.lift(),
            },
        };
        match self.iterate(start) {
            Err(Error::NonConvergence { .. })
                if !explicit && self.config.fallback_to_linear && guess == InitialGuess::Lift =>
            {
                let (field, mut report) = self.iterate(self.linear_solution()?)?;
                report.restarted_from_linear = true;
                Ok((field, report))
            }
            other => other,
        }
    }

    fn iterate(&self, mut field: DiscreteField) -> Result<(DiscreteField, SolveReport)> {
        let exec = self.assembler.execution();
        let mut r = self.assembler.residual(&field, &self.model)?;
        let mut norm = self.residual_norm(&r);
        let tol = (self.config.abs_tol * self.scale).max(self.config.rel_tol * norm);
        let mut report = SolveReport {
            reference_residual: norm,
            residual_scale: self.scale,
            ..Default::default()
        };
        report.residual_history.push(norm);
        let fail = |reason: String, report: SolveReport| Error::NonConvergence {
            reason,
            report: Box::new(report),
        };
        if !norm.is_finite() {
            return Err(fail("residual of the initial guess is not finite".into(), report));
        }
        loop {
            if norm <= tol {
                report.converged = true;
                return Ok((field, report));
            }
            if report.iterations >= self.config.max_iters {
                return Err(fail(
                    format!("{} iterations without reaching {tol:e} (residual {norm:e})", report.iterations),
                    report,
                ));
            }
            let j = self.assembler.jacobian(&field, &self.model)?;
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let (dx, info) = solve_linear_spd(&j, &rhs, self.config.linear_tol, exec)?;
            report.linear_iters.push(info.iterations);

            let mut step = 1.0;
            loop {
                let mut trial = field.clone();
                exec.for_each_mut(trial.coefficients_mut(), |i, c| *c += step * dx[i]);
                let rt = self.assembler.residual(&trial, &self.model)?;
                let nt = self.residual_norm(&rt);
                if nt < norm {
                    field = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
                step *= self.config.backtrack;
                if step < self.config.min_step {
                    report.iterations += 1;
                    report.damping_history.push(step);
                    return Err(fail(
                        format!("line search reached the step floor at residual {norm:e}"),
                        report,
                    ));
                }
            }
            report.iterations += 1;
            report.damping_history.push(step);
            report.residual_history.push(norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_two_by_two() {
        let id = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let (x, _) = solve_linear_spd(&id, &[1.0, -2.0, 3.0], 1e-12, Execution::Sequential).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let (x, info) = solve_linear_spd(&a, &[3.0, 3.0], 1e-12, Execution::Sequential).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        assert!(info.iterations <= 2);
        let y = solve_dense_spd(&a, &[3.0, 3.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_and_bad_matrices() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 2.0)]).unwrap();
        let (x, info) = pcg(&a, &[0.0, 0.0], 1e-12, 10, Execution::Sequential).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(info.iterations, 0);
        let neg = CsrMatrix::from_triplets(2, &[(0, 0, -1.0), (1, 1, 2.0)]).unwrap();
        assert!(pcg(&neg, &[1.0, 1.0], 1e-12, 10, Execution::Sequential).is_err());
        assert!(solve_dense_spd(&neg, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn iteration_cap_reports_residual() {
        // Ill-conditioned tridiagonal system with too few iterations.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        let b = vec![1.0; n];
        match pcg(&a, &b, 1e-12, 3, Execution::Sequential) {
            Err(Error::LinearSolver { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(NewtonConfig::default().validate().is_ok());
        let c = NewtonConfig { max_iters: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = NewtonConfig { backtrack: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn report_serializes() {
        let r = SolveReport { iterations: 2, residual_history: vec![1.0, 0.1, 1e-9], converged: true, ..Default::default() };
        let s = serde_json::to_string(&r).unwrap();
        let back: SolveReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
