//! Stress/strain recovery and derived quantities of a converged Airy field.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteField;
use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::fe::{value_of, DEGREE4, P2_NODES};
use crate::geometry::{Point, VCBoundary};
use crate::par::Execution;

/// Offset applied to ray and profile evaluation points so they fall inside
/// the domain.
pub const NUDGE: f64 = 1e-9;
pub const DST_SAMPLES: usize = 2000;
pub const DST_TOL: f64 = 1e-8;
/// Largest negative barycentric coordinate accepted for points between a
/// boundary chord and the true arc.
const CHORD_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldSample {
    pub point: Point,
    /// `(T13, T23)` in Pa.
    pub t: [f64; 2],
    /// `(E13, E23)`.
    pub e: [f64; 2],
}

/// `(T13, T23) = (dA/dx2, -dA/dx1)`.
#[inline]
pub fn stress_from_gradient(g: [f64; 2]) -> [f64; 2] {
    [g[1], -g[0]]
}

#[inline]
fn strain(model: &MaterialModel, t: [f64; 2]) -> [f64; 2] {
    let s = model.sigma_at(t[0].hypot(t[1]));
    [s * t[0], s * t[1]]
}

fn gradient_near(field: &DiscreteField, p: Point) -> Option<[f64; 2]> {
    let loc = field.mesh().locator();
    let (t, l) = match loc.locate(p) {
        Some(hit) => hit,
        None => {
            let (t, l) = loc.locate_nearby(p)?;
            if l.iter().any(|&x| x < -CHORD_TOL) {
                return None;
            }
            (t, l)
        }
    };
    Some(field.gradient_in(t, &field.mesh().element(t), l))
}

fn sample_at(field: &DiscreteField, model: &MaterialModel, p: Point) -> Result<VectorFieldSample> {
    let g = gradient_near(field, p)
        .ok_or_else(|| Error::Domain(format!("point ({}, {}) lies outside the domain", p[0], p[1])))?;
    let t = stress_from_gradient(g);
    Ok(VectorFieldSample { point: p, t, e: strain(model, t) })
}

/// Stress and strain at the given points, from the lowest-index element
/// containing each point.
pub fn sample_stress_strain(field: &DiscreteField, model: &MaterialModel, points: &[Point]) -> Result<Vec<VectorFieldSample>> {
    points.iter().map(|&p| sample_at(field, model, p)).collect()
}

/// Stress and strain at every element centroid.
pub fn cell_stress_strain(field: &DiscreteField, model: &MaterialModel) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mesh = field.mesh();
    let c = [1.0 / 3.0; 3];
    let t: Vec<[f64; 2]> = (0..mesh.n_triangles())
        .map(|k| stress_from_gradient(field.gradient_in(k, &mesh.element(k), c)))
        .collect();
    let e = t.iter().map(|&s| strain(model, s)).collect();
    (t, e)
}

/// Area-weighted average of the element stresses at every P2 node. Intended
/// for plotting; all reported quantities use raw element gradients.
pub fn averaged_nodal_stress(field: &DiscreteField) -> Vec<[f64; 2]> {
    let mesh = field.mesh();
    let mut acc = vec![[0.0; 2]; mesh.n_dofs()];
    let mut weight = vec![0.0; mesh.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let g = mesh.element(t);
        for (k, d) in mesh.element_dofs(t).into_iter().enumerate() {
            let s = stress_from_gradient(field.gradient_in(t, &g, P2_NODES[k]));
            acc[d][0] += g.area * s[0];
            acc[d][1] += g.area * s[1];
            weight[d] += g.area;
        }
    }
    acc.iter().zip(&weight).map(|(a, w)| [a[0] / w, a[1] / w]).collect()
}

/// Sobolev norm `(int A^2 + |grad A|^2)^(1/2)`.
pub fn h1_norm(field: &DiscreteField) -> f64 {
    h1_norm_with(field, Execution::default())
}

pub fn h1_norm_with(field: &DiscreteField, exec: Execution) -> f64 {
    let mesh = field.mesh();
    exec.sum(mesh.n_triangles(), |t| {
        let g = mesh.element(t);
        let c = field.local(t);
        DEGREE4
            .points
            .iter()
            .map(|&(l, w)| {
                let v = value_of(&c, l);
                let d = field.gradient_in(t, &g, l);
                w * g.area * (v * v + d[0] * d[0] + d[1] * d[1])
            })
            .sum::<f64>()
    })
    .sqrt()
}

fn aligned(a: &DiscreteField, reference: &DiscreteField) -> Result<DiscreteField> {
    if !reference.mesh().descends_from(a.mesh()) {
        return Err(Error::Domain(
            "the reference mesh does not descend from the field's mesh".into(),
        ));
    }
    a.prolongate(reference.mesh())
}

/// `||prolongate(A) - A_ref||_{1,2} / ||A_ref||_{1,2}`, evaluated on the
/// reference mesh.
pub fn relative_error_norm(a: &DiscreteField, reference: &DiscreteField) -> Result<f64> {
    let p = aligned(a, reference)?;
    let diff: Vec<f64> = p
        .coefficients()
        .iter()
        .zip(reference.coefficients())
        .map(|(x, y)| x - y)
        .collect();
    let diff = DiscreteField::new(reference.mesh().clone(), diff)?;
    let denom = h1_norm(reference);
    if denom == 0.0 {
        return Err(Error::Domain("reference field has zero norm".into()));
    }
    Ok(h1_norm(&diff) / denom)
}

/// Relative L2 norm of the stress difference `||T(A) - T(A_ref)|| / ||T(A_ref)||`.
pub fn relative_stress_difference(a: &DiscreteField, reference: &DiscreteField) -> Result<f64> {
    let p = aligned(a, reference)?;
    let mesh = reference.mesh();
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let g = mesh.element(t);
        for &(l, w) in DEGREE4.points {
            let x = p.gradient_in(t, &g, l);
            let y = reference.gradient_in(t, &g, l);
            num += w * g.area * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2));
            den += w * g.area * (y[0] * y[0] + y[1] * y[1]);
        }
    }
    if den == 0.0 {
        return Err(Error::Domain("reference field has zero stress".into()));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    T23,
    E23,
}

impl Component {
    fn of(self, model: &MaterialModel, t: [f64; 2]) -> f64 {
        match self {
            Component::T23 => t[1],
            Component::E23 => strain(model, t)[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub point: Point,
}

/// Maximum of `component` over all quadrature points and P2 nodes of every
/// element. Ties keep the first candidate in element order.
pub fn max_component(field: &DiscreteField, model: &MaterialModel, component: Component) -> Extremum {
    max_component_with(field, model, component, Execution::default())
}

pub fn max_component_with(field: &DiscreteField, model: &MaterialModel, component: Component, exec: Execution) -> Extremum {
    let mesh = field.mesh();
    let per_element = exec.map_range(mesh.n_triangles(), |t| {
        let g = mesh.element(t);
        let mut best = Extremum { value: f64::NEG_INFINITY, point: [f64::NAN; 2] };
        let candidates = DEGREE4.points.iter().map(|(l, _)| *l).chain(P2_NODES.iter().copied());
        for l in candidates {
            let v = component.of(model, stress_from_gradient(field.gradient_in(t, &g, l)));
            if v > best.value {
                best = Extremum { value: v, point: g.point_at(l) };
            }
        }
        best
    });
    per_element
        .into_iter()
        .fold(Extremum { value: f64::NEG_INFINITY, point: [f64::NAN; 2] }, |acc, e| {
            if e.value > acc.value {
                e
            } else {
                acc
            }
        })
}

/// Outcome of a distance-to-threshold query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Finite(f64),
    /// The threshold lies below every value on the ray.
    PosInf,
    /// The threshold lies above every value on the ray.
    NegInf,
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(r) => write!(f, "{r:e}"),
            Distance::PosInf => f.write_str("+inf"),
            Distance::NegInf => f.write_str("-inf"),
        }
    }
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+inf" => Ok(Distance::PosInf),
            "-inf" => Ok(Distance::NegInf),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Distance::Finite)
                .ok_or_else(|| Error::Parse(format!("invalid distance `{v}`"))),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DstKind {
    /// Stress `T23`.
    Stress,
    /// Strain `E23`.
    Strain,
}

impl DstKind {
    fn component(self) -> Component {
        match self {
            DstKind::Stress => Component::T23,
            DstKind::Strain => Component::E23,
        }
    }
}

/// Distance from `origin` along direction `phi` to the boundary of the unit square.
pub fn ray_length(origin: Point, phi: f64) -> f64 {
    let d = [phi.cos(), phi.sin()];
    let mut best = f64::INFINITY;
    for k in 0..2 {
        if d[k] > 1e-15 {
            best = best.min((1.0 - origin[k]) / d[k]);
        } else if d[k] < -1e-15 {
            best = best.min(-origin[k] / d[k]);
        }
    }
    best.max(0.0)
}

/// Value of `kind` at distance `r` from the tip along `phi`, evaluated at
/// `r` clamped to `[NUDGE, length - NUDGE]`.
pub fn ray_value(field: &DiscreteField, model: &MaterialModel, kind: DstKind, phi: f64, r: f64) -> Result<f64> {
    let tip = field.mesh().boundary().tip;
    let len = ray_length(tip, phi);
    let re = r.clamp(NUDGE, (len - NUDGE).max(NUDGE));
    let p = [tip[0] + re * phi.cos(), tip[1] + re * phi.sin()];
    let s = sample_at(field, model, p)?;
    Ok(kind.component().of(model, s.t))
}

/// `min { r >= 0 : value(r, phi) = threshold }` with the infinite cases of
/// the definition, found by uniform sampling and bisection.
pub fn dst(field: &DiscreteField, model: &MaterialModel, kind: DstKind, phi: f64, threshold: f64) -> Result<Distance> {
    let tip = field.mesh().boundary().tip;
    let len = ray_length(tip, phi);
    let eval = |r: f64| ray_value(field, model, kind, phi, r);
    let mut rs = Vec::with_capacity(DST_SAMPLES);
    let mut vs = Vec::with_capacity(DST_SAMPLES);
    for i in 0..DST_SAMPLES {
        let r = len * i as f64 / (DST_SAMPLES - 1) as f64;
        match eval(r) {
            Ok(v) => {
                rs.push(r);
                vs.push(v);
            }
            Err(e) if i == 0 => {
                return Err(Error::Domain(format!("ray at angle {phi} leaves the domain immediately: {e}")))
            }
            // The ray crossed the notch; keep the part inside the domain.
            Err(_) => break,
        }
    }
    if vs[0] == threshold {
        return Ok(Distance::Finite(0.0));
    }
    if vs.iter().all(|&v| v > threshold) {
        return Ok(Distance::PosInf);
    }
    if vs.iter().all(|&v| v < threshold) {
        return Ok(Distance::NegInf);
    }
    let above0 = vs[0] > threshold;
    let i = vs
        .iter()
        .position(|&v| v == threshold || (v > threshold) != above0)
        .expect("a crossing exists");
    if vs[i] == threshold {
        return Ok(Distance::Finite(rs[i]));
    }
    let (mut lo, mut hi) = (rs[i - 1], rs[i]);
    while hi - lo > DST_TOL {
        let mid = 0.5 * (lo + hi);
        let v = eval(mid)?;
        if v == threshold {
            return Ok(Distance::Finite(mid));
        }
        if (v > threshold) == above0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Distance::Finite(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    /// `dst^T(0, 200 MPa)`.
    pub dt2: Distance,
    /// `dst^T(0, 300 MPa)`.
    pub dt3: Distance,
    /// `dst^e(0, 0.01)`.
    pub de1: Distance,
}

pub fn distances(field: &DiscreteField, model: &MaterialModel) -> Result<Distances> {
    Ok(Distances {
        dt2: dst(field, model, DstKind::Stress, 0.0, 200e6)?,
        dt3: dst(field, model, DstKind::Stress, 0.0, 300e6)?,
        de1: dst(field, model, DstKind::Strain, 0.0, 0.01)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Distance from the start point.
    pub r: f64,
    pub t: [f64; 2],
    pub e: [f64; 2],
}

/// `n` uniform samples on the segment `start -> end`; endpoints are moved
/// [`NUDGE`] inward before evaluation.
pub fn line_profile(field: &DiscreteField, model: &MaterialModel, start: Point, end: Point, n: usize) -> Result<Vec<ProfileRow>> {
    if n < 2 {
        return Err(Error::Domain("a profile needs at least two samples".into()));
    }
    let d = [end[0] - start[0], end[1] - start[1]];
    let len = d[0].hypot(d[1]);
    if !(len > 2.0 * NUDGE) {
        return Err(Error::Domain("profile segment is too short".into()));
    }
    let u = [d[0] / len, d[1] / len];
    (0..n)
        .map(|k| {
            let r = len * k as f64 / (n - 1) as f64;
            let re = r.clamp(NUDGE, len - NUDGE);
            let s = sample_at(field, model, [start[0] + re * u[0], start[1] + re * u[1]])?;
            Ok(ProfileRow { r, t: s.t, e: s.e })
        })
        .collect()
}

/// The two standard profile lines from the tip: `phi = 0` to `(1, x2_tip)`
/// and `phi = 90` to `tip + (0, 0.5)`.
pub fn standard_profile_lines(boundary: &VCBoundary) -> [(u32, Point, Point); 2] {
    let tip = boundary.tip;
    [(0, tip, [1.0, tip[1]]), (90, tip, [tip[0], tip[1] + 0.5])]
}
