use std::sync::Arc;

use super::{BoundaryEdge, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{dist, midpoint, Curve, Point};

/// Local index of the reference (longest) edge of triangle `t`. Ties go to
/// the lower global edge index so neighbours agree.
fn reference_edge(mesh: &Mesh, t: usize) -> usize {
    let tri = mesh.triangles()[t];
    let te = mesh.triangle_edges(t);
    let v = mesh.vertices();
    let mut best = 0;
    for k in 1..3 {
        let lk = dist(v[tri[k]], v[tri[(k + 1) % 3]]);
        let lb = dist(v[tri[best]], v[tri[(best + 1) % 3]]);
        if lk > lb || (lk == lb && te[k] < te[best]) {
            best = k;
        }
    }
    best
}

/// Refines the marked triangles with nested red/green/blue splitting.
///
/// Every edge of a marked triangle is bisected; the closure then bisects the
/// longest edge of any triangle that already has a bisected edge, which keeps
/// the result conforming. Midpoints of arc edges are moved radially onto the
/// arc. The returned mesh has `mesh` as parent and records the parent triangle
/// of every child.
pub fn refine(mesh: &Arc<Mesh>, marked: &[usize]) -> Result<Mesh> {
    let nt = mesh.n_triangles();
    let mut edge_marked = vec![false; mesh.edges().len()];
    for &t in marked {
        if t >= nt {
            return Err(Error::Domain(format!("marked triangle {t} out of range (mesh has {nt})")));
        }
        for e in mesh.triangle_edges(t) {
            edge_marked[e] = true;
        }
    }
    let refs: Vec<usize> = (0..nt).map(|t| reference_edge(mesh, t)).collect();
    loop {
        let mut changed = false;
        for t in 0..nt {
            let te = mesh.triangle_edges(t);
            let r = te[refs[t]];
            if !edge_marked[r] && te.iter().any(|&e| edge_marked[e]) {
                edge_marked[r] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let boundary = mesh.boundary().clone();
    let mut vertices = mesh.vertices().to_vec();
    let mut mid = vec![usize::MAX; mesh.edges().len()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if !edge_marked[e] {
            continue;
        }
        let mut p = midpoint(vertices[a], vertices[b]);
        if let Some(be) = mesh.edge_boundary(e) {
            if let Curve::Arc { center, radius, .. } = boundary.segments[be.segment].curve {
                p = snap_to_circle(p, center, radius);
            }
        }
        mid[e] = vertices.len();
        vertices.push(p);
    }

    let mut triangles = Vec::with_capacity(nt * 2);
    let mut ancestry = Vec::with_capacity(nt * 2);
    for t in 0..nt {
        let tri = mesh.triangles()[t];
        let te = mesh.triangle_edges(t);
        let m = te.map(|e| mid[e]);
        let count = m.iter().filter(|&&x| x != usize::MAX).count();
        let mut push = |c: [usize; 3]| {
            triangles.push(c);
            ancestry.push(t);
        };
        if count == 0 {
            push(tri);
            continue;
        }
        if count == 3 {
            let [p0, p1, p2] = tri;
            let [m01, m12, m20] = m;
            push([p0, m01, m20]);
            push([m01, p1, m12]);
            push([m20, m12, p2]);
            push([m01, m12, m20]);
            continue;
        }
        let r = refs[t];
        let (vr, vn, vo) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
        let mr = m[r];
        debug_assert_ne!(mr, usize::MAX);
        let next = m[(r + 1) % 3];
        let prev = m[(r + 2) % 3];
        if next != usize::MAX {
            push([vr, mr, vo]);
            push([mr, vn, next]);
            push([mr, next, vo]);
        } else if prev != usize::MAX {
            push([vr, mr, prev]);
            push([mr, vo, prev]);
            push([mr, vn, vo]);
        } else {
            push([vr, mr, vo]);
            push([mr, vn, vo]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(mesh.boundary_edges().len() * 2);
    for (e, _) in mesh.edges().iter().enumerate() {
        let Some(be) = mesh.edge_boundary(e) else { continue };
        if mid[e] == usize::MAX {
            boundary_edges.push(*be);
        } else {
            let [a, b] = be.vertices;
            boundary_edges.push(BoundaryEdge { vertices: [a, mid[e]], ..*be });
            boundary_edges.push(BoundaryEdge { vertices: [mid[e], b], ..*be });
        }
    }
    boundary_edges.sort_by_key(|e| (e.segment, e.vertices));

    Mesh::assemble(
        vertices,
        triangles,
        boundary_edges,
        boundary,
        mesh.level() + 1,
        Some(mesh.clone()),
        ancestry,
    )
}

fn snap_to_circle(p: Point, center: Point, radius: f64) -> Point {
    let d = [p[0] - center[0], p[1] - center[1]];
    let n = d[0].hypot(d[1]);
    [center[0] + radius * d[0] / n, center[1] + radius * d[1] / n]
}
