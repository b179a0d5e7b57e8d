use super::Mesh;
use crate::fe::ElementGeometry;
use crate::geometry::Point;

/// Barycentric tolerance for point-in-triangle tests.
const INSIDE_TOL: f64 = -1e-12;

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug, Clone)]
pub struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    /// Triangle indices per cell, ascending.
    buckets: Vec<Vec<usize>>,
    elements: Vec<ElementGeometry>,
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Locator {
        let elements: Vec<ElementGeometry> = (0..mesh.n_triangles()).map(|t| mesh.element(t)).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let per_side = ((elements.len() as f64).sqrt().ceil() as usize).max(1);
        let cell = extent / per_side as f64 * (1.0 + 1e-12);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, g) in elements.iter().enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for v in g.vertices {
                for k in 0..2 {
                    a[k] = a[k].min(v[k]);
                    b[k] = b[k].max(v[k]);
                }
            }
            let (i0, j0) = cell_of(lo, cell, nx, ny, a);
            let (i1, j1) = cell_of(lo, cell, nx, ny, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
            elements,
        }
    }

    /// Triangle containing `p` (lowest index on shared edges/vertices) and
    /// the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return None;
        }
        let (i, j) = self.cell_index(p)?;
        self.buckets[j * self.nx + i].iter().find_map(|&t| {
            let l = self.elements[t].barycentric(p);
            (l.iter().all(|&x| x >= INSIDE_TOL)).then_some((t, l))
        })
    }

    /// Like [`Locator::locate`], but for points slightly outside the
    /// triangulation (between a boundary chord and the arc) returns the
    /// nearby triangle with the largest minimal barycentric coordinate.
    pub fn locate_nearby(&self, p: Point) -> Option<(usize, [f64; 3])> {
        if let Some(hit) = self.locate(p) {
            return Some(hit);
        }
        let i = ((p[0] - self.origin[0]) / self.cell).floor() as i64;
        let j = ((p[1] - self.origin[1]) / self.cell).floor() as i64;
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for dj in -1..=1 {
            for di in -1..=1 {
                let (ii, jj) = (i + di, j + dj);
                if ii < 0 || jj < 0 || ii >= self.nx as i64 || jj >= self.ny as i64 {
                    continue;
                }
                for &t in &self.buckets[jj as usize * self.nx + ii as usize] {
                    let l = self.elements[t].barycentric(p);
                    let m = l[0].min(l[1]).min(l[2]);
                    if best.map_or(true, |(bm, bt, _)| m > bm || (m == bm && t < bt)) {
                        best = Some((m, t, l));
                    }
                }
            }
        }
        best.map(|(_, t, l)| (t, l))
    }

    fn cell_index(&self, p: Point) -> Option<(usize, usize)> {
        let fi = (p[0] - self.origin[0]) / self.cell;
        let fj = (p[1] - self.origin[1]) / self.cell;
        let slack = 1e-9;
        if fi < -slack || fj < -slack || fi > self.nx as f64 + slack || fj > self.ny as f64 + slack {
            return None;
        }
        Some(cell_of(self.origin, self.cell, self.nx, self.ny, p))
    }
}

fn cell_of(origin: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
    let i = ((p[0] - origin[0]) / cell).floor().max(0.0) as usize;
    let j = ((p[1] - origin[1]) / cell).floor().max(0.0) as usize;
    (i.min(nx - 1), j.min(ny - 1))
}

#[cfg(test)]
mod tests {
    use crate::mesh::test_support::structured_square;

    #[test]
    fn finds_containing_triangle() {
        let m = structured_square(5);
        let loc = m.locator();
        for &p in &[[0.13, 0.77], [0.999, 0.001], [0.5, 0.5], [0.0, 0.0], [1.0, 1.0]] {
            let (t, l) = loc.locate(p).unwrap();
            let q = m.element(t).point_at(l);
            assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
            assert!(l.iter().all(|&x| x >= -1e-12));
            // Lowest index wins for shared points.
            for s in 0..t {
                let ls = m.element(s).barycentric(p);
                assert!(ls.iter().any(|&x| x < -1e-12));
            }
        }
    }

    #[test]
    fn outside_points() {
        let m = structured_square(3);
        assert!(m.locator().locate([1.5, 0.5]).is_none());
        assert!(m.locator().locate([f64::NAN, 0.5]).is_none());
        assert!(m.locator().locate([1.0 + 1e-6, 0.5]).is_none());
        assert!(m.locator().locate_nearby([1.0 + 1e-6, 0.5]).is_some());
    }
}
