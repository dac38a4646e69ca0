//! Iterated geodesic hulls `C_0 = B`, `C_j = {γ_{x,y}(t) : x, y ∈ C_{j-1}}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifolds::{self, ManifoldPoint};
use crate::sampling;

/// Upper bound on the number of samples kept per level.
pub const MAX_HULL_LAYER: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSample {
    pub generators: Vec<ManifoldPoint>,
    pub level: usize,
    /// `layers[j]` holds the sampled part of `C_j`; `layers[0]` are the generators.
    pub layers: Vec<Vec<ManifoldPoint>>,
}

impl HullSample {
    /// Samples of the deepest level.
    pub fn samples(&self) -> &[ManifoldPoint] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_samples(&self) -> impl Iterator<Item = &ManifoldPoint> {
        self.layers.iter().flatten()
    }

    /// `max_s d(x_1, x_s)` over the generators.
    pub fn bounding_radius(&self) -> f64 {
        let x1 = &self.generators[0];
        self.generators
            .iter()
            .map(|g| manifolds::distance(x1, g).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Whether every sample lies in `B(x_1, bounding_radius + tol)`.
    pub fn within_bounding_ball(&self, tol: f64) -> bool {
        let x1 = &self.generators[0];
        let r = self.bounding_radius() + tol;
        self.all_samples()
            .all(|s| manifolds::distance(x1, s).is_ok_and(|d| d <= r))
    }
}

/// Samples `levels` levels of the iterated hull of `generators`. Level `j`
/// draws `samples_per_segment * |C_{j-1}|` points (at most
/// [`MAX_HULL_LAYER`]) at uniform parameters on geodesics between random
/// pairs of level `j - 1` samples.
pub fn hull_iterate(
    generators: &[ManifoldPoint],
    levels: usize,
    samples_per_segment: usize,
    seed: u64,
) -> Result<HullSample> {
    let Some(first) = generators.first() else {
        return Err(Error::OutOfRange("hull_iterate needs at least one generator".into()));
    };
    if let Some(g) = generators.iter().find(|g| g.manifold() != first.manifold()) {
        return Err(Error::ManifoldMismatch(first.manifold(), g.manifold()));
    }
    let mut rng = sampling::rng(seed);
    let mut layers = vec![generators.to_vec()];
    for _ in 0..levels {
        let prev = layers.last().expect("level 0 is present");
        let next = if prev.iter().all(|p| p.same_as(&prev[0])) {
            vec![prev[0].clone()]
        } else {
            let budget = (samples_per_segment * prev.len()).clamp(1, MAX_HULL_LAYER);
            let mut out = Vec::with_capacity(budget);
            for _ in 0..budget {
                let a = &prev[rng.random_range(0..prev.len())];
                let b = &prev[rng.random_range(0..prev.len())];
                out.push(manifolds::geodesic(a, b, rng.random::<f64>())?);
            }
            out
        };
        layers.push(next);
    }
    Ok(HullSample {
        generators: generators.to_vec(),
        level: levels,
        layers,
    })
}
