//! Closed convex bodies, projections and feasibility certificates.
//!
//! A [`ConvexBody`] is described by a signed violation function that is
//! non-positive exactly on the body. Projections use exact geodesic
//! formulas where they exist and a bisection over feasibility problems
//! otherwise; [`feasibility`] minimizes the maximum violation with Polyak
//! subgradient steps.

mod helly;
mod hull;
mod probe;

pub use helly::{check_helly_family, helly_check, ArmSummary, HellyArm, HellyReport, HellyTrial};
pub use hull::{hull_iterate, HullSample, MAX_HULL_LAYER};
pub use probe::{convexity_probe, Annulus, ProbeCheck, ProbeReport, ProbeViolation, INTERIOR_DEPTH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{self, hyperboloid::minkowski, Manifold, ManifoldPoint, TangentVector};
use crate::sampling::{self, SuiteRng};

/// `x` is a member of a body when its violation is at most this.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_iters: 5000,
        }
    }
}

/// A set given by a membership oracle that can also be sampled.
pub trait Region: Sync {
    fn manifold(&self) -> Manifold;

    /// Signed violation, `≤ 0` inside.
    fn violation(&self, x: &ManifoldPoint) -> Result<f64>;

    fn sample_member(&self, rng: &mut SuiteRng) -> Result<ManifoldPoint>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "BodyRepr")]
pub enum ConvexBody {
    /// Closed geodesic ball.
    Ball { center: ManifoldPoint, radius: f64 },
    /// `{x : ⟨normal, exp_anchor⁻¹ x⟩ ≤ 0}`.
    HalfSpace {
        anchor: ManifoldPoint,
        normal: TangentVector,
    },
    Intersection { members: Vec<ConvexBody> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BodyRepr {
    Ball {
        center: ManifoldPoint,
        radius: f64,
    },
    HalfSpace {
        anchor: ManifoldPoint,
        normal: TangentVector,
    },
    Intersection {
        members: Vec<ConvexBody>,
    },
}

impl TryFrom<BodyRepr> for ConvexBody {
    type Error = Error;

    fn try_from(r: BodyRepr) -> Result<Self> {
        match r {
            BodyRepr::Ball { center, radius } => ConvexBody::ball(center, radius),
            BodyRepr::HalfSpace { anchor, normal } => ConvexBody::half_space(anchor, normal),
            BodyRepr::Intersection { members } => ConvexBody::intersection(members),
        }
    }
}

impl ConvexBody {
    pub fn ball(center: ManifoldPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::OutOfRange(format!("ball radius {radius} must be positive")));
        }
        Ok(ConvexBody::Ball { center, radius })
    }

    pub fn half_space(anchor: ManifoldPoint, normal: TangentVector) -> Result<Self> {
        if !normal.base().same_as(&anchor) {
            return Err(Error::BaseMismatch);
        }
        if normal.norm() <= 1e-12 {
            return Err(Error::OutOfRange("half-space normal must be nonzero".into()));
        }
        Ok(ConvexBody::HalfSpace { anchor, normal })
    }

    pub fn intersection(members: Vec<ConvexBody>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::OutOfRange("intersection needs at least one member".into()));
        };
        let m = first.manifold();
        if let Some(other) = members.iter().find(|b| b.manifold() != m) {
            return Err(Error::ManifoldMismatch(m, other.manifold()));
        }
        Ok(ConvexBody::Intersection { members })
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            ConvexBody::Ball { center, .. } => center.manifold(),
            ConvexBody::HalfSpace { anchor, .. } => anchor.manifold(),
            ConvexBody::Intersection { members } => members[0].manifold(),
        }
    }

    /// Whether convexity of the body is established on its manifold.
    /// Half-spaces are only certified on `R^n` and `H^n`.
    pub fn certified(&self) -> bool {
        match self {
            ConvexBody::Ball { .. } => true,
            ConvexBody::HalfSpace { anchor, .. } => !matches!(anchor.manifold(), Manifold::Spd(_)),
            ConvexBody::Intersection { members } => members.iter().all(ConvexBody::certified),
        }
    }

    pub fn violation(&self, x: &ManifoldPoint) -> Result<f64> {
        match self {
            ConvexBody::Ball { center, radius } => Ok(manifolds::distance(x, center)? - radius),
            ConvexBody::HalfSpace { anchor, normal } => {
                let l = manifolds::log(anchor, x)?;
                manifolds::inner(anchor, normal, &l)
            }
            ConvexBody::Intersection { members } => {
                let mut worst = f64::NEG_INFINITY;
                for b in members {
                    worst = worst.max(b.violation(x)?);
                }
                Ok(worst)
            }
        }
    }

    pub fn contains(&self, x: &ManifoldPoint) -> Result<bool> {
        Ok(self.violation(x)? <= MEMBERSHIP_TOL)
    }

    /// A subgradient of the violation at `x` (of the active member for
    /// intersections).
    pub fn violation_subgradient(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        match self {
            ConvexBody::Ball { center, .. } => {
                let d = manifolds::distance(x, center)?;
                if d <= 1e-15 {
                    return Ok(TangentVector::zero(x.clone()));
                }
                Ok(manifolds::log(x, center)?.scale(-1.0 / d))
            }
            ConvexBody::HalfSpace { normal, .. } => match x.manifold() {
                Manifold::Euclidean(_) => Ok(TangentVector::from_raw(x.clone(), normal.vec().clone())),
                _ => manifolds::numeric_gradient(x, 1e-6, |p| self.violation(p)),
            },
            ConvexBody::Intersection { members } => {
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, b) in members.iter().enumerate() {
                    let v = b.violation(x)?;
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                members[best.1].violation_subgradient(x)
            }
        }
    }

    /// Closed-form projection when one exists for this body and manifold.
    pub fn exact_projection(&self, x: &ManifoldPoint) -> Result<Option<ManifoldPoint>> {
        match self {
            ConvexBody::Ball { center, radius } => {
                let d = manifolds::distance(center, x)?;
                if d <= *radius {
                    return Ok(Some(x.clone()));
                }
                Ok(Some(manifolds::geodesic(center, x, radius / d)?))
            }
            ConvexBody::HalfSpace { anchor, normal } => {
                if self.violation(x)? <= 0.0 {
                    return Ok(Some(x.clone()));
                }
                match x.manifold() {
                    Manifold::Euclidean(_) => {
                        let n = normal.vec();
                        let off = n.dot(&(x.coords() - anchor.coords())) / n.norm_squared();
                        Ok(Some(ManifoldPoint::from_raw(x.manifold(), x.coords() - n * off)))
                    }
                    Manifold::Hyperboloid(_) => {
                        // The boundary is the totally geodesic slice ⟨v, ·⟩_L = 0.
                        let v = normal.vec();
                        let p = x.coords() - v * (minkowski(v, x.coords()) / minkowski(v, v));
                        let scale = (-minkowski(&p, &p)).sqrt();
                        let p = if p[0] < 0.0 { -p / scale } else { p / scale };
                        Ok(Some(ManifoldPoint::from_raw(x.manifold(), p)))
                    }
                    Manifold::Spd(_) => Ok(None),
                }
            }
            ConvexBody::Intersection { members } if members.len() == 1 => members[0].exact_projection(x),
            ConvexBody::Intersection { .. } => Ok(None),
        }
    }

    /// A point associated with the body, used to seed solvers.
    pub fn seed_point(&self) -> &ManifoldPoint {
        match self {
            ConvexBody::Ball { center, .. } => center,
            ConvexBody::HalfSpace { anchor, .. } => anchor,
            ConvexBody::Intersection { members } => members[0].seed_point(),
        }
    }

    fn flat_members(&self) -> Vec<ConvexBody> {
        match self {
            ConvexBody::Intersection { members } => members.iter().flat_map(|m| m.flat_members()).collect(),
            other => vec![other.clone()],
        }
    }
}

impl Region for ConvexBody {
    fn manifold(&self) -> Manifold {
        ConvexBody::manifold(self)
    }

    fn violation(&self, x: &ManifoldPoint) -> Result<f64> {
        ConvexBody::violation(self, x)
    }

    fn sample_member(&self, rng: &mut SuiteRng) -> Result<ManifoldPoint> {
        match self {
            ConvexBody::Ball { center, radius } => Ok(sampling::random_point_near(rng, center, *radius)),
            ConvexBody::HalfSpace { anchor, normal } => {
                let w = sampling::random_tangent(rng, anchor, 1.5);
                let along = manifolds::inner(anchor, normal, &w)?;
                let w = if along > 0.0 {
                    let nn = manifolds::inner(anchor, normal, normal)?;
                    w.axpy(-2.0 * along / nn, normal)?
                } else {
                    w
                };
                manifolds::exp(anchor, &w)
            }
            ConvexBody::Intersection { members } => {
                for attempt in 0..400 {
                    let m = &members[attempt % members.len()];
                    let x = m.sample_member(rng)?;
                    if self.violation(&x)? <= 0.0 {
                        return Ok(x);
                    }
                }
                let base = feasibility(members, &SolverConfig::default())?;
                if base.merit > MEMBERSHIP_TOL {
                    return Err(Error::Infeasible { merit: base.merit });
                }
                let mut radius = 1.0;
                for _ in 0..60 {
                    let x = sampling::random_point_near(rng, &base.point, radius);
                    if self.violation(&x)? <= 0.0 {
                        return Ok(x);
                    }
                    radius *= 0.7;
                }
                Ok(base.point)
            }
        }
    }
}

/// Outcome of [`feasibility`]; `merit` is the maximum violation at `point`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub point: ManifoldPoint,
    pub merit: f64,
    pub iterations: usize,
    pub certified: bool,
}

fn max_violation(bodies: &[ConvexBody], x: &ManifoldPoint) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, b) in bodies.iter().enumerate() {
        let v = b.violation(x)?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

fn check_family(bodies: &[ConvexBody]) -> Result<Manifold> {
    let Some(first) = bodies.first() else {
        return Err(Error::OutOfRange("feasibility needs at least one body".into()));
    };
    let m = first.manifold();
    for b in bodies {
        if b.manifold() != m {
            return Err(Error::ManifoldMismatch(m, b.manifold()));
        }
        if !b.certified() {
            return Err(Error::Uncertified(format!("{:?} on {}", kind_name(b), m)));
        }
    }
    Ok(m)
}

fn kind_name(b: &ConvexBody) -> &'static str {
    match b {
        ConvexBody::Ball { .. } => "ball",
        ConvexBody::HalfSpace { .. } => "half_space",
        ConvexBody::Intersection { .. } => "intersection",
    }
}

/// Minimizes `Φ(z) = max_i violation_i(z)`; `merit ≤ cfg.tol` certifies a
/// common point.
pub fn feasibility(bodies: &[ConvexBody], cfg: &SolverConfig) -> Result<Feasibility> {
    check_family(bodies)?;
    let start = bodies[0].seed_point().clone();
    feasibility_inner(bodies, start, cfg)
}

/// [`feasibility`] from a caller-chosen starting point.
pub fn feasibility_from(
    bodies: &[ConvexBody],
    start: &ManifoldPoint,
    cfg: &SolverConfig,
) -> Result<Feasibility> {
    let m = check_family(bodies)?;
    if start.manifold() != m {
        return Err(Error::ManifoldMismatch(m, start.manifold()));
    }
    feasibility_inner(bodies, start.clone(), cfg)
}

fn feasibility_inner(bodies: &[ConvexBody], start: ManifoldPoint, cfg: &SolverConfig) -> Result<Feasibility> {
    // Phase 1: Polyak steps toward the level -tol/2. For balls and flat
    // half-spaces each step is the exact projection onto the most violated
    // body shrunk by tol/2.
    let target = -0.5 * cfg.tol;
    let mut z = start;
    let (mut phi, mut active) = max_violation(bodies, &z)?;
    let mut best = (z.clone(), phi);
    let mut stall = 0;
    let mut iters = 0;
    while iters < cfg.max_iters {
        if phi <= 0.0 {
            break;
        }
        iters += 1;
        let g = bodies[active].violation_subgradient(&z)?;
        let gn2 = g.norm().powi(2);
        if gn2 <= 1e-30 {
            break;
        }
        z = manifolds::exp(&z, &g.scale(-(phi - target) / gn2))?;
        (phi, active) = max_violation(bodies, &z)?;
        if phi < best.1 - 1e-15 * best.1.abs().max(1.0) {
            best = (z.clone(), phi);
            stall = 0;
        } else {
            stall += 1;
            if stall > 200 {
                break;
            }
        }
    }
    if best.1 <= cfg.tol {
        return Ok(Feasibility {
            point: best.0,
            merit: best.1,
            iterations: iters,
            certified: true,
        });
    }

    // Phase 2: diminishing normalized subgradient steps with midpoint
    // averaging, to report a sharp merit for infeasible families.
    let mut z = best.0.clone();
    let mut prev = z.clone();
    let step0 = 0.5 * best.1.max(1e-3);
    let budget = cfg.max_iters.saturating_sub(iters).max(500);
    for k in 0..budget {
        iters += 1;
        let (phi, active) = max_violation(bodies, &z)?;
        if phi < best.1 {
            best = (z.clone(), phi);
        }
        if k > 0 {
            let mid = manifolds::geodesic(&prev, &z, 0.5)?;
            let (pm, _) = max_violation(bodies, &mid)?;
            if pm < best.1 {
                best = (mid, pm);
            }
        }
        if best.1 <= cfg.tol {
            break;
        }
        let g = bodies[active].violation_subgradient(&z)?;
        let gn = g.norm();
        if gn <= 1e-15 {
            break;
        }
        prev = z.clone();
        let step = step0 / ((k + 1) as f64).sqrt();
        z = manifolds::exp(&z, &g.scale(-step / gn))?;
    }
    Ok(Feasibility {
        certified: best.1 <= cfg.tol,
        point: best.0,
        merit: best.1,
        iterations: iters,
    })
}

/// Metric projection onto a closed convex body.
pub fn project(body: &ConvexBody, x: &ManifoldPoint, cfg: &SolverConfig) -> Result<ManifoldPoint> {
    if body.manifold() != x.manifold() {
        return Err(Error::ManifoldMismatch(body.manifold(), x.manifold()));
    }
    if body.violation(x)? <= MEMBERSHIP_TOL {
        return Ok(x.clone());
    }
    if let Some(p) = body.exact_projection(x)? {
        return Ok(p);
    }
    let members = body.flat_members();
    // A member's projection that already lies in the body is optimal.
    let mut lower = 0.0f64;
    let mut shortcut: Option<(f64, ManifoldPoint)> = None;
    for m in &members {
        if let Some(p) = m.exact_projection(x)? {
            let d = manifolds::distance(x, &p)?;
            lower = lower.max(d);
            if body.violation(&p)? <= MEMBERSHIP_TOL && shortcut.as_ref().is_none_or(|(bd, _)| d > *bd) {
                shortcut = Some((d, p));
            }
        }
    }
    if let Some((_, p)) = shortcut {
        return Ok(p);
    }
    // Bisection on the radius of B(x, ρ) needed to meet the body.
    let relaxed = |bodies: &[ConvexBody], start: &ManifoldPoint| -> Result<Feasibility> {
        let mut r = feasibility_inner(bodies, start.clone(), cfg)?;
        r.certified = r.merit <= cfg.tol;
        Ok(r)
    };
    let start = members[0].seed_point().clone();
    let base = relaxed(&members, &start)?;
    if !base.certified {
        return Err(Error::Infeasible { merit: base.merit });
    }
    let mut best = base.point;
    let mut hi = manifolds::distance(x, &best)?;
    let mut lo = lower.min(hi);
    let mut rounds = 0;
    while hi - lo > 0.25 * cfg.tol && rounds < 100 {
        rounds += 1;
        let mid = 0.5 * (lo + hi);
        let mut family = members.clone();
        family.push(ConvexBody::ball(x.clone(), mid.max(1e-300))?);
        let r = relaxed(&family, &best)?;
        if r.merit <= 0.5 * cfg.tol {
            hi = mid;
            best = r.point;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

/// `d_D(x) = inf_{y ∈ D} d(y, x)`.
pub fn dist_to_body(body: &ConvexBody, x: &ManifoldPoint, cfg: &SolverConfig) -> Result<f64> {
    if body.violation(x)? <= MEMBERSHIP_TOL {
        return Ok(0.0);
    }
    let p = project(body, x, cfg)?;
    manifolds::distance(x, &p)
}
