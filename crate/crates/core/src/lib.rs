//! Finite-element solver for the anti-plane state of stress in a unit-square
//! plate with a smoothed V-notch.
//!
//! The stress field is represented through an Airy stress function `A` with
//! `T13 = dA/dx2` and `T23 = -dA/dx1`. Equilibrium then holds identically, and
//! compatibility turns into the quasilinear elliptic problem
//! `-div(sigma(|grad A|) grad A) = 0` with Dirichlet data obtained by
//! integrating the boundary traction. The crate covers every stage of that
//! pipeline:
//!
//! - [`geometry`]: the notched domain, its tagged boundary, and Dirichlet data.
//! - [`mesh`]: triangulation, nested adaptive refinement, error indicators.
//! - [`constitutive`]: Hooke, power-law and strain-limiting responses.
//! - [`assembly`]: the P2 Lagrange space, quadrature, residual and Jacobian.
//! - [`solver`]: Jacobi-preconditioned CG and damped Newton.
//! - [`postprocess`]: stress/strain recovery, norms, maxima, distances.
//!
//! Hot loops run through [`par::Execution`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adaptive;
pub mod assembly;
pub mod constitutive;
pub mod error;
pub mod fe;
pub mod geometry;
pub mod mesh;
pub mod par;
pub mod postprocess;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::Point;
