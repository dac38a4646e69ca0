//! Registry of geodesically convex functions.
//!
//! Only the kinds listed in [`ConvexFunction`] are accepted by the Jensen
//! checks and by minimization bifunctions; anything else is rejected as
//! [`Error::Unregistered`] when loading from JSON.

use serde::{Deserialize, Serialize};

use crate::busemann::{self, GeodesicRay};
use crate::convexity::{self, ConvexBody, SolverConfig};
use crate::error::{Error, Result};
use crate::manifolds::{self, Manifold, ManifoldPoint, TangentVector};

/// JSON `type` tags of the registered kinds.
pub const REGISTERED: [&str; 5] = ["sq_dist", "sum_sq_dist", "busemann", "dist_to_body", "max"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "FunctionRepr")]
pub enum ConvexFunction {
    /// `d²(·, anchor)`.
    SqDist { anchor: ManifoldPoint },
    /// `Σ_i w_i ½ d²(·, p_i)`.
    SumSqDist {
        anchors: Vec<ManifoldPoint>,
        weights: Vec<f64>,
    },
    /// `b_γ(·)`.
    Busemann { ray: GeodesicRay },
    /// `d_D(·)` for a certified convex body `D`.
    DistToBody { body: ConvexBody },
    /// Pointwise maximum of registered functions.
    Max { terms: Vec<ConvexFunction> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum FunctionRepr {
    SqDist {
        anchor: ManifoldPoint,
    },
    SumSqDist {
        anchors: Vec<ManifoldPoint>,
        weights: Vec<f64>,
    },
    Busemann {
        ray: GeodesicRay,
    },
    DistToBody {
        body: ConvexBody,
    },
    Max {
        terms: Vec<ConvexFunction>,
    },
}

impl TryFrom<FunctionRepr> for ConvexFunction {
    type Error = Error;

    fn try_from(r: FunctionRepr) -> Result<Self> {
        match r {
            FunctionRepr::SqDist { anchor } => Ok(ConvexFunction::SqDist { anchor }),
            FunctionRepr::SumSqDist { anchors, weights } => ConvexFunction::sum_sq_dist(anchors, weights),
            FunctionRepr::Busemann { ray } => Ok(ConvexFunction::Busemann { ray }),
            FunctionRepr::DistToBody { body } => ConvexFunction::dist_to_body(body),
            FunctionRepr::Max { terms } => ConvexFunction::max(terms),
        }
    }
}

impl ConvexFunction {
    pub fn sq_dist(anchor: ManifoldPoint) -> Self {
        ConvexFunction::SqDist { anchor }
    }

    pub fn sum_sq_dist(anchors: Vec<ManifoldPoint>, weights: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() || anchors.len() != weights.len() {
            return Err(Error::OutOfRange(format!(
                "sum_sq_dist needs matching nonempty anchors and weights, got {} and {}",
                anchors.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::OutOfRange("sum_sq_dist weights must be nonnegative".into()));
        }
        same_manifold(anchors.iter().map(ManifoldPoint::manifold))?;
        Ok(ConvexFunction::SumSqDist { anchors, weights })
    }

    /// `½ d²(·, c)`.
    pub fn half_sq_dist(c: ManifoldPoint) -> Self {
        ConvexFunction::SumSqDist {
            anchors: vec![c],
            weights: vec![1.0],
        }
    }

    pub fn busemann(ray: GeodesicRay) -> Self {
        ConvexFunction::Busemann { ray }
    }

    pub fn dist_to_body(body: ConvexBody) -> Result<Self> {
        if !body.certified() {
            return Err(Error::Uncertified(format!("distance to a body on {}", body.manifold())));
        }
        Ok(ConvexFunction::DistToBody { body })
    }

    pub fn max(terms: Vec<ConvexFunction>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::OutOfRange("max needs at least one term".into()));
        }
        same_manifold(terms.iter().map(ConvexFunction::manifold))?;
        Ok(ConvexFunction::Max { terms })
    }

    /// Parses a function, reporting unknown `type` tags as unregistered.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let tag = value.get("type").and_then(|t| t.as_str()).unwrap_or("<missing>");
        if !REGISTERED.contains(&tag) {
            return Err(Error::Unregistered(tag.to_string()));
        }
        if let Some(terms) = value.get("terms").and_then(|t| t.as_array()) {
            for t in terms {
                Self::from_json(t)?;
            }
        }
        serde_json::from_value(value.clone()).map_err(|e| Error::OutOfRange(e.to_string()))
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            ConvexFunction::SqDist { anchor } => anchor.manifold(),
            ConvexFunction::SumSqDist { anchors, .. } => anchors[0].manifold(),
            ConvexFunction::Busemann { ray } => ray.manifold(),
            ConvexFunction::DistToBody { body } => body.manifold(),
            ConvexFunction::Max { terms } => terms[0].manifold(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvexFunction::SqDist { .. } => "sq_dist",
            ConvexFunction::SumSqDist { .. } => "sum_sq_dist",
            ConvexFunction::Busemann { .. } => "busemann",
            ConvexFunction::DistToBody { .. } => "dist_to_body",
            ConvexFunction::Max { .. } => "max",
        }
    }

    pub fn evaluate(&self, x: &ManifoldPoint) -> Result<f64> {
        match self {
            ConvexFunction::SqDist { anchor } => Ok(manifolds::distance(x, anchor)?.powi(2)),
            ConvexFunction::SumSqDist { anchors, weights } => {
                let mut acc = 0.0;
                for (p, w) in anchors.iter().zip(weights) {
                    acc += 0.5 * w * manifolds::distance(x, p)?.powi(2);
                }
                Ok(acc)
            }
            ConvexFunction::Busemann { ray } => busemann::busemann(ray, x),
            ConvexFunction::DistToBody { body } => convexity::dist_to_body(body, x, &SolverConfig::default()),
            ConvexFunction::Max { terms } => {
                let mut best = f64::NEG_INFINITY;
                for t in terms {
                    best = best.max(t.evaluate(x)?);
                }
                Ok(best)
            }
        }
    }

    /// Riemannian gradient, or a subgradient where the function is not
    /// differentiable.
    pub fn gradient(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        match self {
            ConvexFunction::SqDist { anchor } => Ok(manifolds::log(x, anchor)?.scale(-2.0)),
            ConvexFunction::SumSqDist { anchors, weights } => {
                let mut g = TangentVector::zero(x.clone());
                for (p, w) in anchors.iter().zip(weights) {
                    g = g.axpy(-w, &manifolds::log(x, p)?)?;
                }
                Ok(g)
            }
            ConvexFunction::Busemann { ray } => busemann::busemann_gradient(ray, x),
            ConvexFunction::DistToBody { body } => {
                let p = convexity::project(body, x, &SolverConfig::default())?;
                let d = manifolds::distance(x, &p)?;
                if d <= 1e-12 {
                    return Ok(TangentVector::zero(x.clone()));
                }
                Ok(manifolds::log(x, &p)?.scale(-1.0 / d))
            }
            ConvexFunction::Max { terms } => {
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, t) in terms.iter().enumerate() {
                    let v = t.evaluate(x)?;
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                terms[best.1].gradient(x)
            }
        }
    }
}

fn same_manifold(mut ms: impl Iterator<Item = Manifold>) -> Result<()> {
    if let Some(first) = ms.next() {
        if let Some(other) = ms.find(|m| *m != first) {
            return Err(Error::ManifoldMismatch(first, other));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::busemann::make_ray;
    use crate::sampling;

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = sampling::rng(11);
        let m = Manifold::Hyperboloid(2);
        let p = sampling::random_point(&mut rng, m, 1.0);
        let q = sampling::random_point(&mut rng, m, 1.0);
        let z = sampling::random_point(&mut rng, m, 1.0);
        let fs = vec![
            ConvexFunction::sq_dist(p.clone()),
            ConvexFunction::sum_sq_dist(vec![p.clone(), q.clone()], vec![0.3, 0.7]).unwrap(),
            ConvexFunction::busemann(make_ray(&z, &q).unwrap()),
            ConvexFunction::dist_to_body(ConvexBody::ball(p.clone(), 0.2).unwrap()).unwrap(),
        ];
        for f in &fs {
            for _ in 0..5 {
                let x = sampling::random_point(&mut rng, m, 2.0);
                let g = f.gradient(&x).unwrap();
                let n = manifolds::numeric_gradient(&x, 1e-5, |y| f.evaluate(y)).unwrap();
                assert!((g.vec() - n.vec()).norm() < 1e-6, "{}", f.name());
            }
        }
    }

    #[test]
    fn json_registry() {
        let c = ManifoldPoint::euclidean(&[1.0, 0.0]).unwrap();
        let f = ConvexFunction::half_sq_dist(c);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["type"], "sum_sq_dist");
        assert_eq!(ConvexFunction::from_json(&v).unwrap(), f);

        let bad = serde_json::json!({"type": "sine", "anchor": v["anchors"][0]});
        assert!(matches!(ConvexFunction::from_json(&bad), Err(Error::Unregistered(t)) if t == "sine"));
        let nested = serde_json::json!({"type": "max", "terms": [bad]});
        assert!(matches!(ConvexFunction::from_json(&nested), Err(Error::Unregistered(_))));
        let mismatch = serde_json::json!({"type": "sum_sq_dist", "anchors": v["anchors"], "weights": [1.0, 2.0]});
        assert!(ConvexFunction::from_json(&mismatch).is_err());
    }

    #[test]
    fn uncertified_body_is_rejected() {
        let i = Manifold::Spd(2).origin();
        let n = TangentVector::new(i.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let hs = ConvexBody::half_space(i, n).unwrap();
        assert!(matches!(ConvexFunction::dist_to_body(hs), Err(Error::Uncertified(_))));
    }
}
