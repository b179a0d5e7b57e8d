use std::collections::HashMap;
use std::sync::Arc;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{BoundaryEdge, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{cross, dist, sub, BoundaryTag, Point, VCBoundary};

/// Sizing of the initial triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Edge length far from the notch tip, in meters.
    pub target_h: f64,
    /// Edge length near the notch tip, in meters.
    pub tip_h: f64,
    /// The tip size applies within `tip_radius_factor * r_c` of the tip.
    pub tip_radius_factor: f64,
    /// Growth of the size field per unit distance outside the tip region.
    pub grading: f64,
    /// Angle bound handed to Delaunay refinement.
    pub refine_angle_deg: f64,
    /// Meshes whose smallest angle falls below this are rejected.
    pub min_angle_deg: f64,
}

impl MeshOptions {
    pub fn new(target_h: f64, tip_h: f64) -> Self {
        MeshOptions {
            target_h,
            tip_h,
            tip_radius_factor: 5.0,
            grading: 0.5,
            refine_angle_deg: 25.0,
            min_angle_deg: 20.0,
        }
    }

    /// Default level-0 sizing: 0.04 m away from the notch, `r_c / 5` at the
    /// tip, about 4000-5000 elements.
    pub fn standard(rc: f64) -> Self {
        Self::new(0.04, (rc / 5.0).min(0.04))
    }

    /// [`MeshOptions::standard`] with both sizes doubled.
    pub fn half_resolution(rc: f64) -> Self {
        let p = Self::standard(rc);
        Self::new(2.0 * p.target_h, 2.0 * p.tip_h)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tip_h > 0.0 && self.tip_h <= self.target_h && self.target_h.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "mesh sizes must satisfy 0 < tip_h ({}) <= target_h ({})",
                self.tip_h, self.target_h
            )));
        }
        Ok(())
    }

    /// Target edge length at `p`.
    pub fn size_at(&self, boundary: &VCBoundary, p: Point) -> f64 {
        let d = dist(p, boundary.tip);
        let r0 = self.tip_radius_factor * boundary.params.rc;
        if d <= r0 {
            self.tip_h
        } else {
            (self.tip_h + self.grading * (d - r0)).min(self.target_h)
        }
    }
}

/// Sample count per segment used to integrate the size field.
const SIZE_SAMPLES: usize = 512;
const MAX_SIZE_PASSES: usize = 200;

/// Triangulates the VC domain: constrained Delaunay over the discretized
/// boundary, size-driven point insertion, then Delaunay quality refinement.
pub fn generate_mesh(boundary: Arc<VCBoundary>, options: &MeshOptions) -> Result<Mesh> {
    options.validate()?;
    let polyline = discretize_boundary(&boundary, options);
    let polygon: Vec<Point> = polyline.iter().map(|(p, _, _)| *p).collect();

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(polyline.len());
    for (p, _, _) in &polyline {
        handles.push(insert(&mut cdt, *p)?);
    }
    let mut tags: HashMap<(usize, usize), (BoundaryTag, usize)> = HashMap::new();
    for i in 0..polyline.len() {
        let j = (i + 1) % polyline.len();
        let (a, b) = (handles[i], handles[j]);
        if !cdt.can_add_constraint(a, b) {
            return Err(Error::Mesh(format!(
                "boundary self-intersects near ({:.6}, {:.6})",
                polyline[i].0[0], polyline[i].0[1]
            )));
        }
        cdt.add_constraint(a, b);
        let key = (a.index().min(b.index()), a.index().max(b.index()));
        tags.insert(key, (polyline[i].1, polyline[i].2));
    }

    let inside = |p: Point| point_in_polygon(&polygon, p);
    let boundary_distance = |p: Point| polygon_distance(&polygon, p);

    for _ in 0..MAX_SIZE_PASSES {
        let mut candidates = Vec::new();
        for face in cdt.inner_faces() {
            let [a, b, c] = face.vertices().map(|v| to_point(v.position()));
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            if !inside(centroid) {
                continue;
            }
            let longest = dist(a, b).max(dist(b, c)).max(dist(c, a));
            let h = options.size_at(&boundary, centroid);
            if longest <= 1.8 * h {
                continue;
            }
            let cc = to_point(face.circumcenter());
            let target = if inside(cc) && boundary_distance(cc) > 0.5 * options.size_at(&boundary, cc) {
                cc
            } else {
                centroid
            };
            candidates.push(target);
        }
        if candidates.is_empty() {
            break;
        }
        let mut accepted: Vec<Point> = Vec::with_capacity(candidates.len());
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let cell = options.tip_h;
        for p in candidates {
            let h = options.size_at(&boundary, p);
            if boundary_distance(p) < 0.25 * h {
                continue;
            }
            let reach = (0.5 * h / cell).ceil() as i64;
            let (ci, cj) = ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
            let mut crowded = false;
            'scan: for di in -reach..=reach {
                for dj in -reach..=reach {
                    if let Some(list) = grid.get(&(ci + di, cj + dj)) {
                        if list.iter().any(|&k| dist(accepted[k], p) < 0.5 * h) {
                            crowded = true;
                            break 'scan;
                        }
                    }
                }
            }
            if !crowded {
                grid.entry((ci, cj)).or_default().push(accepted.len());
                accepted.push(p);
            }
        }
        if accepted.is_empty() {
            break;
        }
        for p in accepted {
            insert(&mut cdt, p)?;
        }
    }

    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(options.refine_angle_deg))
        .exclude_outer_faces(true)
        .keep_constraint_edges()
        .with_max_additional_vertices(20 * cdt.num_vertices() + 10_000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Mesh("Delaunay refinement ran out of Steiner points".into()));
    }

    // Compact the CDT into the inner faces and the vertices they use.
    let mut remap = vec![usize::MAX; cdt.num_vertices()];
    let mut used = Vec::new();
    let mut faces = Vec::new();
    let positions: Vec<Point> = cdt.vertices().map(|v| to_point(v.position())).collect();
    for face in cdt.inner_faces() {
        let idx = face.vertices().map(|v| v.fix().index());
        let [a, b, c] = idx.map(|i| positions[i]);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        if !inside(centroid) {
            continue;
        }
        for &i in &idx {
            if remap[i] == usize::MAX {
                remap[i] = 0;
                used.push(i);
            }
        }
        faces.push((idx, face.adjacent_edges().map(|e| e.is_constraint_edge())));
    }
    used.sort_unstable();
    for (new, &old) in used.iter().enumerate() {
        remap[old] = new;
    }
    let vertices: Vec<Point> = used.iter().map(|&i| positions[i]).collect();

    let mut triangles = Vec::with_capacity(faces.len());
    let mut boundary_edges = Vec::new();
    for (idx, constrained) in faces {
        let mut tri = idx.map(|i| remap[i]);
        let area2 = cross(sub(vertices[tri[1]], vertices[tri[0]]), sub(vertices[tri[2]], vertices[tri[0]]));
        if area2 < 0.0 {
            tri.swap(1, 2);
        }
        // Tag boundary edges by the constraints they came from.
        for k in 0..3 {
            let (a, b) = (idx[k], idx[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if let Some(&(tag, segment)) = tags.get(&key) {
                boundary_edges.push(BoundaryEdge {
                    vertices: [remap[a], remap[b]],
                    tag,
                    segment,
                });
            } else if constrained.iter().any(|&c| c) && constrained[k] {
                return Err(Error::Mesh(format!(
                    "constraint edge ({a}, {b}) was split during refinement"
                )));
            }
        }
        triangles.push(tri);
    }
    boundary_edges.sort_by_key(|e| (e.segment, e.vertices));

    let mesh = Mesh::new(vertices, triangles, boundary_edges, boundary)?;
    let mut worst = (f64::INFINITY, 0);
    for t in 0..mesh.n_triangles() {
        let a = mesh.element(t).min_angle_deg();
        if a < worst.0 {
            worst = (a, t);
        }
    }
    if worst.0 < options.min_angle_deg {
        let p = mesh.vertices()[mesh.triangles()[worst.1][0]];
        return Err(Error::Mesh(format!(
            "minimum angle {:.2} deg below {} deg near ({:.6}, {:.6})",
            worst.0, options.min_angle_deg, p[0], p[1]
        )));
    }
    mesh.check()?;
    Ok(mesh)
}

/// Boundary polyline as `(point, tag, segment)` where tag/segment describe
/// the edge from this point to the next.
fn discretize_boundary(boundary: &VCBoundary, options: &MeshOptions) -> Vec<(Point, BoundaryTag, usize)> {
    let mut out = Vec::new();
    for (si, seg) in boundary.segments.iter().enumerate() {
        let curve = &seg.curve;
        let len = curve.length();
        // Cumulative integral of 1/h along the segment.
        let mut cumulative = Vec::with_capacity(SIZE_SAMPLES + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..SIZE_SAMPLES {
            let s = (k as f64 + 0.5) / SIZE_SAMPLES as f64;
            acc += len / SIZE_SAMPLES as f64 / options.size_at(boundary, curve.point_at(s));
            cumulative.push(acc);
        }
        let mut n = acc.ceil().max(1.0) as usize;
        if let crate::geometry::Curve::Arc { radius, .. } = *curve {
            // Chord sagitta below tip_h / 10.
            let max_chord = (0.8 * radius * options.tip_h).sqrt();
            n = n.max((len / max_chord).ceil() as usize).max(2);
            // Even count puts the tip (the arc midpoint) on a vertex.
            n += n % 2;
            for k in 0..n {
                out.push((curve.point_at(k as f64 / n as f64), seg.tag, si));
            }
            continue;
        }
        for k in 0..n {
            let target = acc * k as f64 / n as f64;
            let j = cumulative.partition_point(|&c| c < target).max(1);
            let (c0, c1) = (cumulative[j - 1], cumulative[j]);
            let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
            let s = ((j - 1) as f64 + frac) / SIZE_SAMPLES as f64;
            out.push((curve.point_at(if k == 0 { 0.0 } else { s }), seg.tag, si));
        }
    }
    out
}

fn insert(cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: Point) -> Result<spade::handles::FixedVertexHandle> {
    cdt.insert(Point2::new(p[0], p[1]))
        .map_err(|e| Error::Mesh(format!("cannot insert ({}, {}): {e:?}", p[0], p[1])))
}

fn to_point(p: Point2<f64>) -> Point {
    [p.x, p.y]
}

fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            crate::geometry::Curve::Line {
                from: poly[i],
                to: poly[(i + 1) % n],
            }
            .distance_to(p)
        })
        .fold(f64::INFINITY, f64::min)
}
