//! Text mesh format (`VCMESH 1`) and legacy VTK export.
//!
//! ```text
//! VCMESH 1
//! geometry <alpha_deg> <rc>
//! level <n>
//! vertices <nv>
//! <x1> <x2>
//! triangles <nt>
//! <a> <b> <c>
//! boundary_edges <nb>
//! <a> <b> <tag> <segment>
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{BoundaryEdge, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{build_vc_boundary, BoundaryTag, GeometryParams};

const MAGIC: &str = "VCMESH 1";

pub fn write_vcmesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    let params = mesh.boundary().params;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "geometry {:?} {:?}", params.alpha_deg(), params.rc)?;
    writeln!(out, "level {}", mesh.level())?;
    writeln!(out, "vertices {}", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?}", v[0], v[1])?;
    }
    writeln!(out, "triangles {}", mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "boundary_edges {}", mesh.boundary_edges().len())?;
    for e in mesh.boundary_edges() {
        writeln!(out, "{} {} {} {}", e.vertices[0], e.vertices[1], e.tag, e.segment)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            self.number += 1;
            match self.inner.next() {
                None => return Err(Error::Parse(format!("line {}: unexpected end of file", self.number))),
                Some(line) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if !trimmed.is_empty() && !trimmed.starts_with('#') {
                        return Ok(trimmed.to_string());
                    }
                }
            }
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {msg}", self.number))
    }

    fn header(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found `{line}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let rest = self.header(key)?;
        match rest.as_slice() {
            [n] => n.parse().map_err(|_| self.err(format!("bad count `{n}`"))),
            _ => Err(self.err(format!("`{key}` takes one count"))),
        }
    }

    fn fields<T: std::str::FromStr>(&mut self, n: usize) -> Result<Vec<T>> {
        let line = self.next()?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", vals.len())));
        }
        vals.iter()
            .map(|v| v.parse::<T>().map_err(|_| self.err(format!("cannot parse `{v}`"))))
            .collect()
    }
}

/// Reads a mesh written by [`write_vcmesh`]. The boundary is rebuilt from the
/// geometry line; parent links are not stored, so the mesh has no parent.
pub fn read_vcmesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let magic = lines.next()?;
    if magic != MAGIC {
        return Err(lines.err(format!("expected `{MAGIC}`, found `{magic}`")));
    }
    let geom = lines.header("geometry")?;
    let nums: Vec<f64> = geom
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| lines.err(format!("cannot parse `{s}`"))))
        .collect::<Result<_>>()?;
    let [alpha_deg, rc] = nums[..] else {
        return Err(lines.err("`geometry` takes alpha_deg and rc"));
    };
    let boundary = Arc::new(build_vc_boundary(GeometryParams::from_degrees(alpha_deg, rc)?)?);
    let level = lines.count("level")?;

    let nv = lines.count("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let v: Vec<f64> = lines.fields(2)?;
        vertices.push([v[0], v[1]]);
    }
    let nt = lines.count("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let t: Vec<usize> = lines.fields(3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    let nb = lines.count("boundary_edges")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let f: Vec<String> = lines.fields(4)?;
        let parse = |s: &str| s.parse::<usize>().map_err(|_| lines.err(format!("cannot parse `{s}`")));
        boundary_edges.push(BoundaryEdge {
            vertices: [parse(&f[0])?, parse(&f[1])?],
            tag: BoundaryTag::parse(&f[2])?,
            segment: parse(&f[3])?,
        });
    }
    let mesh = Mesh::assemble(vertices, triangles, boundary_edges, boundary, level, None, Vec::new())?;
    mesh.check()?;
    Ok(mesh)
}

/// Writes the linear triangulation as a legacy ASCII VTK unstructured grid.
pub fn write_vtk_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "VC mesh level {}", mesh.level())?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{:e} {:e} 0", v[0], v[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    Ok(())
}

/// Writes a P2 field on quadratic triangles (VTK cell type 22) with named
/// nodal scalars and per-cell vectors.
pub fn write_vtk_p2<W: Write>(
    mesh: &Mesh,
    point_scalars: &[(&str, &[f64])],
    cell_vectors: &[(&str, &[[f64; 2]])],
    mut out: W,
) -> Result<()> {
    let nd = mesh.n_dofs();
    let nt = mesh.n_triangles();
    for (name, data) in point_scalars {
        if data.len() != nd {
            return Err(Error::Domain(format!("point data `{name}` has {} values, expected {nd}", data.len())));
        }
    }
    for (name, data) in cell_vectors {
        if data.len() != nt {
            return Err(Error::Domain(format!("cell data `{name}` has {} values, expected {nt}", data.len())));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "VC P2 field level {}", mesh.level())?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nd} double")?;
    for p in mesh.dof_points() {
        writeln!(out, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {} {}", nt, 7 * nt)?;
    for t in 0..nt {
        let d = mesh.element_dofs(t);
        writeln!(out, "6 {} {} {} {} {} {}", d[0], d[1], d[2], d[3], d[4], d[5])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "22")?;
    }
    if !point_scalars.is_empty() {
        writeln!(out, "POINT_DATA {nd}")?;
        for (name, data) in point_scalars {
            writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for v in data.iter() {
                writeln!(out, "{v:e}")?;
            }
        }
    }
    if !cell_vectors.is_empty() {
        writeln!(out, "CELL_DATA {nt}")?;
        for (name, data) in cell_vectors {
            writeln!(out, "VECTORS {name} double")?;
            for v in data.iter() {
                writeln!(out, "{:e} {:e} 0", v[0], v[1])?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_support::structured_square;

    #[test]
    fn round_trip() {
        let m = structured_square(3);
        let mut buf = Vec::new();
        write_vcmesh(&m, &mut buf).unwrap();
        let r = read_vcmesh(&buf[..]).unwrap();
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
        assert_eq!(r.boundary_edges(), m.boundary_edges());
        assert_eq!(r.level(), 0);
    }

    #[test]
    fn truncated_file_reports_line() {
        let m = structured_square(1);
        let mut buf = Vec::new();
        write_vcmesh(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        let err = read_vcmesh(cut.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(ref s) if s.contains("line")));
    }

    #[test]
    fn bad_tag_rejected() {
        let text = "VCMESH 1\ngeometry 180 0.01\nlevel 0\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 1\n0 1 G9 0\n";
        assert!(read_vcmesh(text.as_bytes()).is_err());
    }

    #[test]
    fn vtk_lengths_checked() {
        let m = structured_square(1);
        let a = vec![0.0; m.n_dofs()];
        let mut out = Vec::new();
        write_vtk_p2(&m, &[("A", &a)], &[], &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("CELL_TYPES 2\n22\n22"));
        assert!(write_vtk_p2(&m, &[("A", &a[1..])], &[], Vec::new()).is_err());
    }
}
