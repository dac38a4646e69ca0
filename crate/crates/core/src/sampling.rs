//! Seeded random points and tangent vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::manifolds::{Manifold, ManifoldPoint, TangentVector};

/// The RNG used throughout the suites; one stream per seed.
pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tangent vector with i.i.d. standard normal coefficients in an
/// orthonormal basis, scaled by `scale`.
pub fn random_tangent(rng: &mut SuiteRng, x: &ManifoldPoint, scale: f64) -> TangentVector {
    let m = x.manifold();
    let mut acc = TangentVector::zero(x.clone());
    for e in m.tangent_basis(x) {
        let g: f64 = rng.sample(StandardNormal);
        acc = acc.axpy(g * scale, &e).expect("basis shares the base point");
    }
    acc
}

pub fn random_unit_tangent(rng: &mut SuiteRng, x: &ManifoldPoint) -> TangentVector {
    loop {
        let v = random_tangent(rng, x, 1.0);
        let n = v.norm();
        if n > 1e-6 {
            return v.scale(1.0 / n);
        }
    }
}

/// `exp_x(r u)` with `u` a uniform unit direction and `r ~ U(0, radius)`.
pub fn random_point_near(rng: &mut SuiteRng, x: &ManifoldPoint, radius: f64) -> ManifoldPoint {
    let u = random_unit_tangent(rng, x);
    let r = radius * rng.random::<f64>();
    crate::manifolds::exp(x, &u.scale(r)).expect("tangent vector is based at x")
}

/// Random point within `spread` of the canonical origin.
pub fn random_point(rng: &mut SuiteRng, manifold: Manifold, spread: f64) -> ManifoldPoint {
    random_point_near(rng, &manifold.origin(), spread)
}

/// Random weights on the simplex (normalized exponentials, so the Dirichlet(1) law).
pub fn random_simplex(rng: &mut SuiteRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}
