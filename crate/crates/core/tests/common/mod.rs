#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnotch_core::geometry::{build_vc_boundary, GeometryParams, VCBoundary};
use vnotch_core::mesh::{generate_mesh, Mesh, MeshOptions};
use vnotch_core::Point;

pub fn boundary(alpha_deg: f64, rc: f64) -> Arc<VCBoundary> {
    Arc::new(build_vc_boundary(GeometryParams::from_degrees(alpha_deg, rc).unwrap()).unwrap())
}

pub fn mesh(alpha_deg: f64, rc: f64, options: &MeshOptions) -> Arc<Mesh> {
    Arc::new(generate_mesh(boundary(alpha_deg, rc), options).unwrap())
}

/// Mesh coarse enough for fast tests but still graded toward the tip.
pub fn coarse_mesh(alpha_deg: f64, rc: f64) -> Arc<Mesh> {
    mesh(alpha_deg, rc, &MeshOptions::new(0.1, rc / 2.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points strictly inside the mesh, by rejection from the unit square.
pub fn interior_points(mesh: &Mesh, n: usize, seed: u64) -> Vec<Point> {
    let mut r = rng(seed);
    let loc = mesh.locator();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = [r.random_range(0.001..0.999), r.random_range(0.001..0.999)];
        if let Some((_, l)) = loc.locate(p) {
            if l.iter().all(|&x| x > 1e-6) {
                out.push(p);
            }
        }
    }
    out
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
