use super::{Mesh, NO_TRIANGLE};
use crate::error::{Error, Result};
use crate::fe::{gradient_of, p2_laplacians};
use crate::geometry::{dist, lerp};
use crate::par::Execution;

/// Two-point Gauss rule on `[0, 1]`.
const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Residual error indicator `eta_T` of a P2 field for the Laplace operator:
/// `eta_T^2 = h_T^2 ||Delta A_h||^2_T + 1/2 sum_e h_e ||[dA_h/dn]||^2_e`
/// over the interior edges of `T`.
pub fn estimate_error(mesh: &Mesh, coefficients: &[f64], exec: Execution) -> Result<Vec<f64>> {
    if coefficients.len() != mesh.n_dofs() {
        return Err(Error::Domain(format!(
            "field has {} coefficients, mesh has {} DOFs",
            coefficients.len(),
            mesh.n_dofs()
        )));
    }
    let local = |t: usize| -> [f64; 6] { mesh.element_dofs(t).map(|d| coefficients[d]) };

    let jumps = exec.map_range(mesh.edges().len(), |e| {
        let [t0, t1] = mesh.edge_triangles(e);
        if t1 == NO_TRIANGLE {
            return 0.0;
        }
        let [a, b] = mesh.edges()[e];
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let he = dist(pa, pb);
        let n = [(pb[1] - pa[1]) / he, (pa[0] - pb[0]) / he];
        let (g0, g1) = (mesh.element(t0), mesh.element(t1));
        let (c0, c1) = (local(t0), local(t1));
        let mut integral = 0.0;
        for (s, w) in GAUSS2 {
            let p = lerp(pa, pb, s);
            let d0 = gradient_of(&c0, &g0.grad_lambda, g0.barycentric(p));
            let d1 = gradient_of(&c1, &g1.grad_lambda, g1.barycentric(p));
            let j = (d0[0] - d1[0]) * n[0] + (d0[1] - d1[1]) * n[1];
            integral += w * he * j * j;
        }
        he * integral
    });

    Ok(exec.map_range(mesh.n_triangles(), |t| {
        let g = mesh.element(t);
        let lap: f64 = p2_laplacians(&g.grad_lambda)
            .iter()
            .zip(local(t).iter())
            .map(|(l, c)| l * c)
            .sum();
        let h = g.diameter();
        let edge_part: f64 = mesh.triangle_edges(t).iter().map(|&e| 0.5 * jumps[e]).sum();
        (h * h * lap * lap * g.area + edge_part).sqrt()
    }))
}

/// Doerfler marking: the smallest set of triangles, taken in order of
/// decreasing indicator (ties by index), whose squared indicators sum to at
/// least `theta` times the total.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = indicators.iter().map(|e| e * e).sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if acc >= theta * total {
            break;
        }
        acc += indicators[t] * indicators[t];
        marked.push(t);
    }
    marked.sort_unstable();
    marked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_support::structured_square;

    fn interpolate(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        mesh.dof_points().iter().map(|p| f(p[0], p[1])).collect()
    }

    #[test]
    fn quadratic_harmonic_has_zero_indicator() {
        let m = structured_square(4);
        let c = interpolate(&m, |x, y| x * x - y * y + 3.0 * x * y - y);
        let eta = estimate_error(&m, &c, Execution::Sequential).unwrap();
        assert!(eta.iter().all(|&e| e < 1e-10));
    }

    #[test]
    fn laplacian_term_matches_hand_value() {
        // A = x^2: Delta A = 2, gradients continuous, so eta_T^2 = h^2 * 4 * |T|.
        let m = structured_square(2);
        let c = interpolate(&m, |x, _| x * x);
        let eta = estimate_error(&m, &c, Execution::Sequential).unwrap();
        let h2 = 2.0 * 0.25;
        for e in eta {
            assert!((e * e - h2 * 4.0 * 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let m = structured_square(6);
        let c = interpolate(&m, |x, y| (3.0 * x).sin() * y.exp());
        let a = estimate_error(&m, &c, Execution::Sequential).unwrap();
        let b = estimate_error(&m, &c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dorfler_picks_largest_first() {
        let eta = [1.0, 3.0, 2.0, 3.0];
        // total 23; the two 3s give 18 >= 11.5.
        assert_eq!(dorfler_mark(&eta, 0.5), vec![1, 3]);
        assert_eq!(dorfler_mark(&eta, 1.0), vec![0, 1, 2, 3]);
        assert!(dorfler_mark(&[0.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn rejects_wrong_length() {
        let m = structured_square(1);
        assert!(estimate_error(&m, &[0.0], Execution::Sequential).is_err());
    }
}
