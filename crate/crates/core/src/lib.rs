//! Convex analysis and equilibrium problems on Hadamard manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifolds`]: Euclidean space, the hyperboloid model of hyperbolic
//!   space and SPD matrices with the affine-invariant metric.
//! * [`busemann`]: geodesic rays, Busemann functions and the resolvent
//!   regularization term `d(z,x) * b_{z,x}(y)`.
//! * [`convexity`]: closed convex bodies, projections, feasibility,
//!   hull iteration and the Helly harness.
//! * [`functions`]: the registry of convex functions used by Jensen checks
//!   and minimization bifunctions.
//! * [`combinations`]: pseudo-convex and commutative convex combinations,
//!   Karcher means and Jensen checks.
//! * [`equilibrium`]: bifunctions, the Busemann-regularized resolvent and
//!   the proximal point loop.
//! * [`suites`]: seeded property suites shared by the CLI and the
//!   acceptance tests.
//!
//! Data-parallel loops go through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod busemann;
pub mod combinations;
pub mod convexity;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod functions;
pub mod manifolds;
pub mod sampling;
pub mod suites;

mod linalg;

pub use error::{Error, Result};
pub use exec::Exec;
pub use manifolds::{Manifold, ManifoldPoint, TangentVector};
