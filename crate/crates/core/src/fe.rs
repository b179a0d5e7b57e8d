//! Quadratic Lagrange (P2) basis on affine triangles and triangle quadrature.
//!
//! Local node order: the three vertices, then the midpoints of the local edges
//! `(0, 1)`, `(1, 2)` and `(2, 0)`.

use crate::geometry::Point;

/// Symmetric quadrature rule on a triangle in barycentric coordinates.
/// Weights sum to one; multiply by the triangle area.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: &'static [([f64; 3], f64)],
}

const A4: f64 = 0.445_948_490_915_964_9;
const B4: f64 = 0.108_103_018_168_070_2;
const C4: f64 = 0.091_576_213_509_770_74;
const D4: f64 = 0.816_847_572_980_458_5;
const W4A: f64 = 0.223_381_589_678_011_47;
const W4B: f64 = 0.109_951_743_655_321_87;

/// Six-point rule exact for polynomials of degree 4.
pub const DEGREE4: QuadratureRule = QuadratureRule {
    degree: 4,
    points: &[
        ([A4, A4, B4], W4A),
        ([A4, B4, A4], W4A),
        ([B4, A4, A4], W4A),
        ([C4, C4, D4], W4B),
        ([C4, D4, C4], W4B),
        ([D4, C4, C4], W4B),
    ],
};

const A6: f64 = 0.249_286_745_170_910_42;
const B6: f64 = 0.501_426_509_658_179_2;
const C6: f64 = 0.063_089_014_491_502_23;
const D6: f64 = 0.873_821_971_016_995_5;
const E6: f64 = 0.053_145_049_844_816_95;
const F6: f64 = 0.310_352_451_033_784_4;
const G6: f64 = 0.636_502_499_121_398_7;
const W6A: f64 = 0.116_786_275_726_379_37;
const W6B: f64 = 0.050_844_906_370_206_82;
const W6C: f64 = 0.082_851_075_618_373_58;

/// Twelve-point rule exact for polynomials of degree 6.
pub const DEGREE6: QuadratureRule = QuadratureRule {
    degree: 6,
    points: &[
        ([A6, A6, B6], W6A),
        ([A6, B6, A6], W6A),
        ([B6, A6, A6], W6A),
        ([C6, C6, D6], W6B),
        ([C6, D6, C6], W6B),
        ([D6, C6, C6], W6B),
        ([E6, F6, G6], W6C),
        ([E6, G6, F6], W6C),
        ([F6, E6, G6], W6C),
        ([F6, G6, E6], W6C),
        ([G6, E6, F6], W6C),
        ([G6, F6, E6], W6C),
    ],
};

/// Barycentric coordinates of the six P2 nodes.
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    /// Signed area (positive for counterclockwise triangles).
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / twice;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        ElementGeometry {
            vertices,
            area: 0.5 * twice,
            grad_lambda,
        }
    }

    pub fn point_at(&self, lambda: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.vertices;
        [
            lambda[0] * p0[0] + lambda[1] * p1[0] + lambda[2] * p2[0],
            lambda[0] * p0[1] + lambda[1] * p1[1] + lambda[2] * p2[1],
        ]
    }

    /// Barycentric coordinates of an arbitrary point (extrapolates outside).
    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let p0 = self.vertices[0];
        let d = [p[0] - p0[0], p[1] - p0[1]];
        let l1 = self.grad_lambda[1][0] * d[0] + self.grad_lambda[1][1] * d[1];
        let l2 = self.grad_lambda[2][0] * d[0] + self.grad_lambda[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        let [p0, p1, p2] = self.vertices;
        let e = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        e(p0, p1).max(e(p1, p2)).max(e(p2, p0))
    }

    /// Smallest interior angle in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..3 {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % 3];
            let c = self.vertices[(k + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
        best
    }
}

#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Physical gradients of the six basis functions at barycentric point `l`.
#[inline]
pub fn p2_gradients(g: &[[f64; 2]; 3], l: [f64; 3]) -> [[f64; 2]; 6] {
    let comb = |a: f64, ga: [f64; 2], b: f64, gb: [f64; 2]| {
        [a * ga[0] + b * gb[0], a * ga[1] + b * gb[1]]
    };
    [
        comb(4.0 * l[0] - 1.0, g[0], 0.0, g[0]),
        comb(4.0 * l[1] - 1.0, g[1], 0.0, g[1]),
        comb(4.0 * l[2] - 1.0, g[2], 0.0, g[2]),
        comb(4.0 * l[1], g[0], 4.0 * l[0], g[1]),
        comb(4.0 * l[2], g[1], 4.0 * l[1], g[2]),
        comb(4.0 * l[0], g[2], 4.0 * l[2], g[0]),
    ]
}

/// Constant Laplacians of the six basis functions.
pub fn p2_laplacians(g: &[[f64; 2]; 3]) -> [f64; 6] {
    let d = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    [
        4.0 * d(g[0], g[0]),
        4.0 * d(g[1], g[1]),
        4.0 * d(g[2], g[2]),
        8.0 * d(g[0], g[1]),
        8.0 * d(g[1], g[2]),
        8.0 * d(g[2], g[0]),
    ]
}

/// `sum_i c_i grad(phi_i)` at barycentric point `l`.
#[inline]
pub fn gradient_of(coeffs: &[f64; 6], g: &[[f64; 2]; 3], l: [f64; 3]) -> [f64; 2] {
    let grads = p2_gradients(g, l);
    let mut out = [0.0; 2];
    for (c, gr) in coeffs.iter().zip(grads.iter()) {
        out[0] += c * gr[0];
        out[1] += c * gr[1];
    }
    out
}

#[inline]
pub fn value_of(coeffs: &[f64; 6], l: [f64; 3]) -> f64 {
    p2_values(l).iter().zip(coeffs).map(|(v, c)| v * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Integral of x^a y^b over the unit reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check_exactness(rule: &QuadratureRule) {
        let weight_sum: f64 = rule.points.iter().map(|(_, w)| w).sum();
        assert!((weight_sum - 1.0).abs() < 1e-15);
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let approx: f64 = rule
                    .points
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = monomial_integral(a, b);
                assert!((approx - exact).abs() < 1e-14, "x^{a} y^{b}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn degree4_rule_is_exact() {
        check_exactness(&DEGREE4);
    }

    #[test]
    fn degree6_rule_is_exact() {
        check_exactness(&DEGREE6);
    }

    #[test]
    fn basis_is_nodal() {
        for (i, node) in P2_NODES.iter().enumerate() {
            let v = p2_values(*node);
            for (j, vj) in v.iter().enumerate() {
                assert_eq!(*vj, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geom = ElementGeometry::new([[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]]);
        let coeffs = [0.3, -1.2, 0.7, 2.0, -0.4, 1.1];
        let p = geom.point_at([0.2, 0.5, 0.3]);
        let h = 1e-6;
        let f = |q: Point| value_of(&coeffs, geom.barycentric(q));
        let fd = [
            (f([p[0] + h, p[1]]) - f([p[0] - h, p[1]])) / (2.0 * h),
            (f([p[0], p[1] + h]) - f([p[0], p[1] - h])) / (2.0 * h),
        ];
        let g = gradient_of(&coeffs, &geom.grad_lambda, [0.2, 0.5, 0.3]);
        assert!((fd[0] - g[0]).abs() < 1e-8 && (fd[1] - g[1]).abs() < 1e-8);
    }

    #[test]
    fn laplacian_of_quadratic() {
        // Interpolate x^2 + y^2 (Laplacian 4) on a skewed triangle.
        let geom = ElementGeometry::new([[0.0, 0.0], [1.3, 0.2], [0.4, 0.9]]);
        let coeffs: Vec<f64> = P2_NODES
            .iter()
            .map(|l| {
                let p = geom.point_at(*l);
                p[0] * p[0] + p[1] * p[1]
            })
            .collect();
        let lap: f64 = p2_laplacians(&geom.grad_lambda)
            .iter()
            .zip(&coeffs)
            .map(|(l, c)| l * c)
            .sum();
        assert!((lap - 4.0).abs() < 1e-12);
    }

    #[test]
    fn geometry_quantities() {
        let geom = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(geom.area, 0.5);
        assert!((geom.min_angle_deg() - 45.0).abs() < 1e-12);
        assert!((geom.diameter() - 2f64.sqrt()).abs() < 1e-15);
        let l = geom.barycentric([0.25, 0.5]);
        assert!((l[0] - 0.25).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15);
    }
}
