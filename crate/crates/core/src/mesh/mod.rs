//! Conforming triangulations of the VC domain with tagged boundary edges and
//! parent links across refinement levels.

mod estimate;
mod generate;
pub mod io;
mod locate;
mod refine;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

pub use estimate::{dorfler_mark, estimate_error};
pub use generate::{generate_mesh, MeshOptions};
pub use locate::Locator;
pub use refine::refine;

use crate::error::{Error, Result};
use crate::fe::ElementGeometry;
use crate::geometry::{midpoint, BoundaryTag, Point, VCBoundary, ON_BOUNDARY_TOL};

pub const NO_TRIANGLE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
    /// Index into [`VCBoundary::segments`].
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub n_elements: usize,
    pub n_vertices: usize,
    pub n_dofs_p2: usize,
    /// Smallest longest-edge length over all triangles.
    pub h_min: f64,
    /// Largest longest-edge length over all triangles.
    pub h_max: f64,
}

#[derive(Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    boundary: Arc<VCBoundary>,
    level: usize,
    parent: Option<Arc<Mesh>>,
    /// Parent triangle of every triangle; empty at level 0.
    ancestry: Vec<usize>,

    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<[usize; 2]>,
    /// Index into `boundary_edges` for every global edge on the boundary.
    edge_boundary: Vec<Option<usize>>,
    locator: OnceLock<Locator>,
}

impl Mesh {
    /// Builds a level-0 mesh and checks conformity, orientation and tagging.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        boundary: Arc<VCBoundary>,
    ) -> Result<Mesh> {
        Self::assemble(vertices, triangles, boundary_edges, boundary, 0, None, Vec::new())
    }

    pub(crate) fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        boundary: Arc<VCBoundary>,
        level: usize,
        parent: Option<Arc<Mesh>>,
        ancestry: Vec<usize>,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let g = ElementGeometry::new([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if !(g.area > 0.0) {
                return Err(Error::Mesh(format!(
                    "triangle {t} near ({:.6}, {:.6}) is degenerate or clockwise (area {:e})",
                    vertices[tri[0]][0], vertices[tri[0]][1], g.area
                )));
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + nv);
        let mut edge_triangles: Vec<[usize; 2]> = Vec::with_capacity(edges.capacity());
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_triangles.push([NO_TRIANGLE; 2]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0] == NO_TRIANGLE {
                    slot[0] = t;
                } else if slot[1] == NO_TRIANGLE {
                    slot[1] = t;
                } else {
                    return Err(Error::Mesh(format!(
                        "edge ({a}, {b}) is shared by more than two triangles"
                    )));
                }
                te[k] = e;
            }
            triangle_edges.push(te);
        }

        let mut edge_boundary = vec![None; edges.len()];
        for (i, be) in boundary_edges.iter().enumerate() {
            let [a, b] = be.vertices;
            let e = edge_index.get(&(a.min(b), a.max(b))).copied().ok_or_else(|| {
                Error::Mesh(format!("boundary edge ({a}, {b}) is not an edge of the mesh"))
            })?;
            if edge_boundary[e].is_some() {
                return Err(Error::Mesh(format!("boundary edge ({a}, {b}) is tagged twice")));
            }
            if edge_triangles[e][1] != NO_TRIANGLE {
                return Err(Error::Mesh(format!("tagged edge ({a}, {b}) is interior")));
            }
            if be.segment >= boundary.segments.len() || boundary.segments[be.segment].tag != be.tag {
                return Err(Error::Mesh(format!(
                    "boundary edge ({a}, {b}) has inconsistent segment/tag"
                )));
            }
            edge_boundary[e] = Some(i);
        }
        for (e, tris) in edge_triangles.iter().enumerate() {
            if tris[1] == NO_TRIANGLE && edge_boundary[e].is_none() {
                let [a, b] = edges[e];
                return Err(Error::Mesh(format!(
                    "edge ({a}, {b}) near ({:.6}, {:.6}) lies on the boundary but carries no tag (hanging node?)",
                    vertices[a][0], vertices[a][1]
                )));
            }
        }

        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            boundary,
            level,
            parent,
            ancestry,
            edges,
            triangle_edges,
            edge_triangles,
            edge_boundary,
            locator: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn boundary(&self) -> &Arc<VCBoundary> {
        &self.boundary
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> Option<&Arc<Mesh>> {
        self.parent.as_ref()
    }

    /// Parent triangle index of `t` in the next coarser mesh.
    pub fn parent_triangle(&self, t: usize) -> Option<usize> {
        self.ancestry.get(t).copied()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge indices of the local edges `(0,1)`, `(1,2)`, `(2,0)`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Triangles adjacent to edge `e`; the second is [`NO_TRIANGLE`] on the boundary.
    pub fn edge_triangles(&self, e: usize) -> [usize; 2] {
        self.edge_triangles[e]
    }

    pub fn edge_boundary(&self, e: usize) -> Option<&BoundaryEdge> {
        self.edge_boundary[e].map(|i| &self.boundary_edges[i])
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e].is_some()
    }

    pub fn element(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[t];
        ElementGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    /// Number of scalar P2 degrees of freedom (vertices, then edge midpoints).
    pub fn n_dofs(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    /// Global P2 DOFs of triangle `t` in local node order.
    #[inline]
    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.triangles[t];
        let [e0, e1, e2] = self.triangle_edges[t];
        let nv = self.vertices.len();
        [a, b, c, nv + e0, nv + e1, nv + e2]
    }

    /// Coordinates of every P2 node.
    pub fn dof_points(&self) -> Vec<Point> {
        let mut pts = self.vertices.clone();
        pts.extend(
            self.edges
                .iter()
                .map(|&[a, b]| midpoint(self.vertices[a], self.vertices[b])),
        );
        pts
    }

    /// DOFs on the boundary paired with the tagged edge they belong to.
    pub fn boundary_dofs(&self) -> Vec<(usize, BoundaryEdge)> {
        let nv = self.vertices.len();
        let mut out: Vec<(usize, BoundaryEdge)> = Vec::new();
        let mut seen = vec![false; self.n_dofs()];
        for (e, b) in self.edge_boundary.iter().enumerate() {
            if let Some(i) = *b {
                let be = self.boundary_edges[i];
                for dof in [be.vertices[0], be.vertices[1], nv + e] {
                    if !seen[dof] {
                        seen[dof] = true;
                        out.push((dof, be));
                    }
                }
            }
        }
        out.sort_by_key(|(d, _)| *d);
        out
    }

    /// Mask of DOFs lying on the boundary.
    pub fn boundary_dof_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_dofs()];
        for (d, _) in self.boundary_dofs() {
            mask[d] = true;
        }
        mask
    }

    pub fn stats(&self) -> MeshStats {
        let (mut h_min, mut h_max) = (f64::INFINITY, 0.0f64);
        for t in 0..self.n_triangles() {
            let h = self.element(t).diameter();
            h_min = h_min.min(h);
            h_max = h_max.max(h);
        }
        MeshStats {
            n_elements: self.n_triangles(),
            n_vertices: self.n_vertices(),
            n_dofs_p2: self.n_dofs(),
            h_min,
            h_max,
        }
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.element(t).area).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.element(t).min_angle_deg())
            .fold(f64::INFINITY, f64::min)
    }

    /// Spatial index for point queries, built on first use.
    pub fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Ancestor of triangle `t` on mesh `ancestor`, which must be this mesh or
    /// one of its coarser predecessors.
    pub fn ancestor_in(&self, ancestor: &Mesh, t: usize) -> Option<usize> {
        let mut mesh = self;
        let mut tri = t;
        loop {
            if std::ptr::eq(mesh, ancestor) {
                return Some(tri);
            }
            tri = mesh.parent_triangle(tri)?;
            mesh = mesh.parent.as_deref()?;
        }
    }

    /// True if `ancestor` is this mesh or lies on its parent chain.
    pub fn descends_from(&self, ancestor: &Mesh) -> bool {
        let mut mesh = Some(self);
        while let Some(m) = mesh {
            if std::ptr::eq(m, ancestor) {
                return true;
            }
            mesh = m.parent.as_deref();
        }
        false
    }

    /// Checks structural invariants: counterclockwise non-degenerate triangles,
    /// manifold edges, complete tagging, and boundary vertices on their curves.
    pub fn check(&self) -> Result<()> {
        for be in &self.boundary_edges {
            let curve = &self.boundary.segments[be.segment].curve;
            for &v in &be.vertices {
                let d = curve.distance_to(self.vertices[v]);
                if d > ON_BOUNDARY_TOL {
                    return Err(Error::Mesh(format!(
                        "boundary vertex {v} is {d:e} m off segment {}",
                        self.boundary.segment_label(be.segment)
                    )));
                }
            }
        }
        if let Some(parent) = &self.parent {
            if self.ancestry.len() != self.n_triangles() {
                return Err(Error::Mesh("ancestry does not cover all triangles".into()));
            }
            if self.ancestry.iter().any(|&p| p >= parent.n_triangles()) {
                return Err(Error::Mesh("ancestry references a missing parent triangle".into()));
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::structured_square;
    use super::*;

    #[test]
    fn structured_square_counts() {
        let m = structured_square(4);
        let s = m.stats();
        assert_eq!(s.n_elements, 32);
        assert_eq!(s.n_vertices, 25);
        // Euler: E = V + T - 1 for a disk.
        assert_eq!(m.edges().len(), 25 + 32 - 1);
        assert_eq!(s.n_dofs_p2, 25 + 56);
        assert!((s.h_min - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(s.h_min, s.h_max);
        assert!((m.area() - 1.0).abs() < 1e-15);
        m.check().unwrap();
        assert_eq!(m.boundary_dofs().len(), 32);
    }

    #[test]
    fn rejects_untagged_boundary() {
        let m = structured_square(2);
        let mut be = m.boundary_edges().to_vec();
        be.pop();
        let err = Mesh::new(m.vertices().to_vec(), m.triangles().to_vec(), be, m.boundary().clone());
        assert!(matches!(err, Err(Error::Mesh(ref s)) if s.contains("no tag")));
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let m = structured_square(1);
        let mut tris = m.triangles().to_vec();
        tris[0].swap(1, 2);
        let err = Mesh::new(m.vertices().to_vec(), tris, m.boundary_edges().to_vec(), m.boundary().clone());
        assert!(matches!(err, Err(Error::Mesh(_))));
    }
}
