//! The VC domain: a unit square with a V-notch cut into its left edge, the
//! notch tip rounded by a circular arc tangent to both flanks.
//!
//! The boundary is traversed counterclockwise starting at the origin:
//! `Gamma1` (bottom), `Gamma2` (right), `Gamma3` (top) and `Gamma4` (the
//! notched left side, from `(0, 1)` back down to `(0, 0)`).

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance for deciding that a point lies on the boundary, in meters.
pub const ON_BOUNDARY_TOL: f64 = 1e-10;

/// Default shear traction on the top and bottom edges, in pascals.
pub const DEFAULT_TRACTION: f64 = 1e8;

const SQUARE_ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    /// Notch opening angle in radians, in `(0, pi]`.
    pub alpha: f64,
    /// Radius of the smoothing arc in meters.
    pub rc: f64,
}

impl GeometryParams {
    pub fn new(alpha: f64, rc: f64) -> Result<Self> {
        let params = GeometryParams { alpha, rc };
        params.validate()?;
        Ok(params)
    }

    pub fn from_degrees(alpha_deg: f64, rc: f64) -> Result<Self> {
        Self::new(alpha_deg.to_radians(), rc)
    }

    pub fn alpha_deg(&self) -> f64 {
        self.alpha.to_degrees()
    }

    /// Opening angles within `1e-12` rad of `pi` describe the plain square.
    pub fn is_plain_square(&self) -> bool {
        (self.alpha - PI).abs() <= SQUARE_ANGLE_TOL
    }

    /// Supremum of admissible arc radii, or `None` for the plain square.
    pub fn rc_bound(alpha: f64) -> Option<f64> {
        let half = 0.5 * alpha;
        if (alpha - PI).abs() <= SQUARE_ANGLE_TOL {
            None
        } else if alpha < 0.5 * PI {
            Some(0.5 * half.sin() / (half.cos() * half.cos()))
        } else {
            Some(0.5 / half.cos())
        }
    }

    pub fn validate(&self) -> Result<()> {
        let GeometryParams { alpha, rc } = *self;
        if !alpha.is_finite() || alpha <= 0.0 || alpha > PI + SQUARE_ANGLE_TOL {
            return Err(Error::ParameterDomain(format!(
                "notch angle alpha = {alpha} rad must lie in (0, pi]"
            )));
        }
        if !rc.is_finite() || rc <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "arc radius r_c = {rc} m must be positive"
            )));
        }
        if let Some(bound) = Self::rc_bound(alpha) {
            if rc >= bound {
                let which = if alpha < 0.5 * PI {
                    "0.5 sin(alpha/2) / cos^2(alpha/2)"
                } else {
                    "0.5 / cos(alpha/2)"
                };
                return Err(Error::ParameterDomain(format!(
                    "arc radius r_c = {rc} m violates r_c < {which} = {bound} for alpha = {:.6} deg",
                    alpha.to_degrees()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Gamma1 => "G1",
            BoundaryTag::Gamma2 => "G2",
            BoundaryTag::Gamma3 => "G3",
            BoundaryTag::Gamma4 => "G4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "G1" => Ok(BoundaryTag::Gamma1),
            "G2" => Ok(BoundaryTag::Gamma2),
            "G3" => Ok(BoundaryTag::Gamma3),
            "G4" => Ok(BoundaryTag::Gamma4),
            _ => Err(Error::Parse(format!("unknown boundary tag `{s}`"))),
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Line {
        from: Point,
        to: Point,
    },
    /// Arc parametrized by angle, going linearly from `start_angle` to
    /// `end_angle` (clockwise when `end_angle < start_angle`).
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl Curve {
    /// Point at normalized parameter `s` in `[0, 1]`.
    pub fn point_at(&self, s: f64) -> Point {
        match *self {
            Curve::Line { from, to } => lerp(from, to, s),
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                let theta = start_angle + s * (end_angle - start_angle);
                [
                    center[0] + radius * theta.cos(),
                    center[1] + radius * theta.sin(),
                ]
            }
        }
    }

    /// Unit tangent in the direction of travel.
    pub fn tangent_at(&self, s: f64) -> Point {
        match *self {
            Curve::Line { from, to } => normalize(sub(to, from)),
            Curve::Arc {
                start_angle,
                end_angle,
                ..
            } => {
                let theta = start_angle + s * (end_angle - start_angle);
                let sign = (end_angle - start_angle).signum();
                [-sign * theta.sin(), sign * theta.cos()]
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Curve::Line { from, to } => dist(from, to),
            Curve::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
        }
    }

    pub fn start(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Point {
        self.point_at(1.0)
    }

    /// Closest point of the curve to `p`.
    pub fn project(&self, p: Point) -> Point {
        match *self {
            Curve::Line { from, to } => {
                let d = sub(to, from);
                let len2 = dot(d, d);
                let s = if len2 > 0.0 {
                    (dot(sub(p, from), d) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                lerp(from, to, s)
            }
            Curve::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                let q = sub(p, center);
                let theta = q[1].atan2(q[0]);
                let (lo, hi) = if start_angle < end_angle {
                    (start_angle, end_angle)
                } else {
                    (end_angle, start_angle)
                };
                if theta >= lo && theta <= hi && norm(q) > 0.0 {
                    [
                        center[0] + radius * theta.cos(),
                        center[1] + radius * theta.sin(),
                    ]
                } else {
                    let a = self.start();
                    let b = self.end();
                    if dist(p, a) <= dist(p, b) {
                        a
                    } else {
                        b
                    }
                }
            }
        }
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        dist(p, self.project(p))
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Curve::Arc { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub tag: BoundaryTag,
    /// Index of this piece within its tag (`Gamma4` splits into several parts).
    pub part: usize,
    pub curve: Curve,
}

impl Segment {
    /// Label such as `G1` or `G4B`.
    pub fn label(&self, parts_in_tag: usize) -> String {
        if parts_in_tag > 1 {
            format!("{}{}", self.tag.name(), (b'A' + self.part as u8) as char)
        } else {
            self.tag.name().to_string()
        }
    }
}

/// Closed, counterclockwise, tagged boundary of the VC domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VCBoundary {
    pub params: GeometryParams,
    pub segments: Vec<Segment>,
    /// Center of the smoothing arc.
    pub arc_center: Point,
    /// Rightmost point of the arc, `arc_center + (r_c, 0)`.
    pub tip: Point,
}

impl VCBoundary {
    pub fn arc_segment(&self) -> Option<usize> {
        self.segments.iter().position(|s| s.curve.is_arc())
    }

    pub fn parts_in(&self, tag: BoundaryTag) -> usize {
        self.segments.iter().filter(|s| s.tag == tag).count()
    }

    pub fn segment_label(&self, index: usize) -> String {
        let seg = &self.segments[index];
        seg.label(self.parts_in(seg.tag))
    }

    /// Index of the first segment within [`ON_BOUNDARY_TOL`] of `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| s.curve.distance_to(p) <= ON_BOUNDARY_TOL)
    }

    /// Exact area enclosed by the curved boundary.
    pub fn area(&self) -> f64 {
        let GeometryParams { alpha, rc } = self.params;
        if self.params.is_plain_square() {
            return 1.0;
        }
        let half = 0.5 * alpha;
        let wedge = if alpha < 0.5 * PI {
            0.25 * half.tan()
        } else {
            0.25 / half.tan()
        };
        // The rounding gives back the region between the sharp vertex and the arc.
        let kite = rc * rc / half.tan();
        let sector = 0.5 * rc * rc * (PI - alpha);
        1.0 - wedge + kite - sector
    }

    /// Samples the boundary as `(label, point)` rows for debugging export.
    /// Straight segments contribute their end points, arcs `arc_samples + 1`
    /// points.
    pub fn polyline(&self, arc_samples: usize) -> Vec<(String, Point)> {
        let mut rows = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let label = self.segment_label(i);
            let n = if seg.curve.is_arc() {
                arc_samples.max(1)
            } else {
                1
            };
            for k in 0..=n {
                rows.push((label.clone(), seg.curve.point_at(k as f64 / n as f64)));
            }
        }
        rows
    }

    /// Writes [`VCBoundary::polyline`] as CSV rows `tag,x1,x2`.
    pub fn write_polyline_csv<W: Write>(&self, mut out: W, arc_samples: usize) -> Result<()> {
        writeln!(out, "tag,x1,x2")?;
        for (label, p) in self.polyline(arc_samples) {
            writeln!(out, "{label},{},{}", p[0], p[1])?;
        }
        Ok(())
    }
}

/// Builds the tagged boundary for the given notch parameters.
pub fn build_vc_boundary(params: GeometryParams) -> Result<VCBoundary> {
    params.validate()?;
    let line = |tag, part, from, to| Segment {
        tag,
        part,
        curve: Curve::Line { from, to },
    };
    let mut segments = vec![
        line(BoundaryTag::Gamma1, 0, [0.0, 0.0], [1.0, 0.0]),
        line(BoundaryTag::Gamma2, 0, [1.0, 0.0], [1.0, 1.0]),
        line(BoundaryTag::Gamma3, 0, [1.0, 1.0], [0.0, 1.0]),
    ];

    if params.is_plain_square() {
        segments.push(line(BoundaryTag::Gamma4, 0, [0.0, 1.0], [0.0, 0.0]));
        let arc_center = [-params.rc, 0.5];
        return Ok(VCBoundary {
            params,
            segments,
            arc_center,
            tip: [0.0, 0.5],
        });
    }

    let GeometryParams { alpha, rc } = params;
    let half = 0.5 * alpha;
    let (sin_h, cos_h) = half.sin_cos();
    let vertex_x = if alpha < 0.5 * PI {
        0.5
    } else {
        0.5 / half.tan()
    };
    let arc_center = [vertex_x - rc / sin_h, 0.5];
    let upper_touch = [arc_center[0] + rc * sin_h, arc_center[1] + rc * cos_h];
    let lower_touch = [arc_center[0] + rc * sin_h, arc_center[1] - rc * cos_h];
    let theta_upper = 0.5 * PI - half;
    let arc = Curve::Arc {
        center: arc_center,
        radius: rc,
        start_angle: theta_upper,
        end_angle: -theta_upper,
    };
    let g4 = BoundaryTag::Gamma4;

    if alpha < 0.5 * PI {
        let offset = 0.5 * half.tan();
        let upper_corner = [0.0, 0.5 + offset];
        let lower_corner = [0.0, 0.5 - offset];
        segments.push(line(g4, 0, [0.0, 1.0], upper_corner));
        segments.push(line(g4, 1, upper_corner, upper_touch));
        segments.push(Segment {
            tag: g4,
            part: 2,
            curve: arc,
        });
        segments.push(line(g4, 3, lower_touch, lower_corner));
        segments.push(line(g4, 4, lower_corner, [0.0, 0.0]));
    } else {
        segments.push(line(g4, 0, [0.0, 1.0], upper_touch));
        segments.push(Segment {
            tag: g4,
            part: 1,
            curve: arc,
        });
        segments.push(line(g4, 2, lower_touch, [0.0, 0.0]));
    }

    Ok(VCBoundary {
        params,
        segments,
        arc_center,
        tip: [arc_center[0] + rc, arc_center[1]],
    })
}

/// Boundary loading: shear traction `F` on the top and bottom edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    /// Traction magnitude `F` in pascals.
    pub traction: f64,
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData {
            traction: DEFAULT_TRACTION,
        }
    }
}

impl BoundaryData {
    pub fn new(traction: f64) -> Self {
        BoundaryData { traction }
    }

    /// Prescribed tangential traction `g` on a segment with this tag.
    pub fn traction_on(&self, tag: BoundaryTag) -> f64 {
        match tag {
            BoundaryTag::Gamma1 => -self.traction,
            BoundaryTag::Gamma3 => self.traction,
            BoundaryTag::Gamma2 | BoundaryTag::Gamma4 => 0.0,
        }
    }

    /// Dirichlet value `A0` at `x`, assuming `x` lies on a segment tagged `tag`.
    /// The integration constant is fixed by `A0(0, 0) = 0`.
    pub fn value_on(&self, tag: BoundaryTag, x: Point) -> f64 {
        match tag {
            BoundaryTag::Gamma1 | BoundaryTag::Gamma3 => -self.traction * x[0],
            BoundaryTag::Gamma2 => -self.traction,
            BoundaryTag::Gamma4 => 0.0,
        }
    }
}

/// Dirichlet value of the Airy function at a boundary point, in Pa m.
pub fn dirichlet_value(boundary: &VCBoundary, traction: f64, x: Point) -> Result<f64> {
    let seg = boundary.locate(x).ok_or_else(|| {
        Error::Domain(format!(
            "point ({}, {}) is not on the boundary (tolerance {ON_BOUNDARY_TOL} m)",
            x[0], x[1]
        ))
    })?;
    Ok(BoundaryData::new(traction).value_on(boundary.segments[seg].tag, x))
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub(crate) fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

pub(crate) fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn normalize(a: Point) -> Point {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}
