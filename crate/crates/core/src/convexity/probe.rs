//! Sampled convexity probes for membership oracles.

use rand::Rng;
use serde::Serialize;

use super::{Region, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::manifolds::{self, Manifold, ManifoldPoint};
use crate::sampling::{self, SuiteRng};

/// Interior points have violation below `-INTERIOR_DEPTH`; the interior
/// segment check stops at `t = 1 - INTERIOR_DEPTH`.
pub const INTERIOR_DEPTH: f64 = 1e-3;

const SEGMENT_STEPS: usize = 16;

/// The non-convex control set `{x : inner ≤ d(x, center) ≤ outer}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Annulus {
    pub center: ManifoldPoint,
    pub inner: f64,
    pub outer: f64,
}

impl Region for Annulus {
    fn manifold(&self) -> Manifold {
        self.center.manifold()
    }

    fn violation(&self, x: &ManifoldPoint) -> Result<f64> {
        let d = manifolds::distance(&self.center, x)?;
        Ok((self.inner - d).max(d - self.outer))
    }

    fn sample_member(&self, rng: &mut SuiteRng) -> Result<ManifoldPoint> {
        let u = sampling::random_unit_tangent(rng, &self.center);
        let r = rng.random_range(self.inner..=self.outer);
        manifolds::exp(&self.center, &u.scale(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeCheck {
    Segment,
    InteriorSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeViolation {
    pub check: ProbeCheck,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub pairs_tested: usize,
    pub interior_pairs_tested: usize,
    pub max_segment_violation: f64,
    pub violations: Vec<ProbeViolation>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Finds a boundary point on the geodesic from the interior point `x`
/// through `w`, returning the last parameter still inside.
fn boundary_toward(region: &dyn Region, x: &ManifoldPoint, w: &ManifoldPoint) -> Result<Option<ManifoldPoint>> {
    if x.same_as(w) {
        return Ok(None);
    }
    let at = |s: f64| manifolds::geodesic_extended(x, w, s);
    let mut hi = 1.0;
    while region.violation(&at(hi)?)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if region.violation(&at(mid)?)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(at(lo)?))
}

/// Samples `pairs` member pairs and checks that their geodesic segments
/// stay in the region, then samples interior/boundary pairs and checks
/// that the half-open segment stays strictly inside.
pub fn convexity_probe(region: &dyn Region, pairs: usize, seed: u64) -> Result<ProbeReport> {
    let mut rng = sampling::rng(seed);
    let mut violations = Vec::new();
    let mut max_seg = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let x = region.sample_member(&mut rng)?;
        let y = region.sample_member(&mut rng)?;
        for k in 0..=SEGMENT_STEPS {
            let t = k as f64 / SEGMENT_STEPS as f64;
            let v = region.violation(&manifolds::geodesic(&x, &y, t)?)?;
            max_seg = max_seg.max(v);
            if v > MEMBERSHIP_TOL {
                violations.push(ProbeViolation {
                    check: ProbeCheck::Segment,
                    x: x.to_vec(),
                    y: y.to_vec(),
                    t,
                    violation: v,
                });
                break;
            }
        }
    }

    let mut interior = 0;
    let mut attempts = 0;
    while interior < pairs && attempts < 20 * pairs.max(1) {
        attempts += 1;
        let x = region.sample_member(&mut rng)?;
        if region.violation(&x)? >= -INTERIOR_DEPTH {
            continue;
        }
        let w = region.sample_member(&mut rng)?;
        let Some(y) = boundary_toward(region, &x, &w)? else {
            continue;
        };
        interior += 1;
        for k in 0..=SEGMENT_STEPS {
            let t = (1.0 - INTERIOR_DEPTH) * k as f64 / SEGMENT_STEPS as f64;
            let v = region.violation(&manifolds::geodesic(&x, &y, t)?)?;
            if v >= 0.0 {
                violations.push(ProbeViolation {
                    check: ProbeCheck::InteriorSegment,
                    x: x.to_vec(),
                    y: y.to_vec(),
                    t,
                    violation: v,
                });
                break;
            }
        }
    }
    if pairs > 0 && interior == 0 {
        return Err(Error::OutOfRange("region has no sampled interior points".into()));
    }
    Ok(ProbeReport {
        pairs_tested: pairs,
        interior_pairs_tested: interior,
        max_segment_violation: max_seg,
        violations,
    })
}
