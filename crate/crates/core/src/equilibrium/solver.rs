//! Inner minimization, residuals, the resolvent and the proximal point loop.

use serde::Serialize;

use super::{Bifunction, EPInstance, EpConfig, GRADIENT_STEP, LAMBDA_RANGE};
use crate::busemann::{self, GeodesicRay};
use crate::convexity::{self, ConvexBody, Region, SolverConfig};
use crate::error::{Error, Result};
use crate::functions::ConvexFunction;
use crate::manifolds::{self, Manifold, ManifoldPoint, TangentVector};
use crate::sampling;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Inner loops stop once the projected step shrinks below this.
const STEP_TOL: f64 = 1e-14;
/// Longest tangent step taken on curved manifolds, where coordinates grow
/// like `e^t`.
const CURVED_REACH: f64 = 30.0;
/// Relative rounding noise of slice values.
const NOISE: f64 = 1e-14;

/// `y ↦ F(z, y)` for a fixed `z`, with per-`z` data precomputed.
enum Slice<'a> {
    Minimization {
        f: &'a ConvexFunction,
        fz: f64,
    },
    Regularized {
        base: Box<Slice<'a>>,
        lambda: f64,
        ray: Option<(f64, GeodesicRay)>,
    },
    Generic {
        f: &'a Bifunction,
        z: ManifoldPoint,
    },
}

impl<'a> Slice<'a> {
    fn new(f: &'a Bifunction, z: &ManifoldPoint) -> Result<Self> {
        Ok(match f {
            Bifunction::Minimization { f } => Slice::Minimization { f, fz: f.evaluate(z)? },
            Bifunction::Regularized { base, lambda, anchor } => {
                let d = manifolds::distance(z, anchor)?;
                let ray = if d <= busemann::COINCIDENT_TOL {
                    None
                } else {
                    Some((d, busemann::make_ray(z, anchor)?))
                };
                Slice::Regularized {
                    base: Box::new(Slice::new(base, z)?),
                    lambda: *lambda,
                    ray,
                }
            }
            _ => Slice::Generic { f, z: z.clone() },
        })
    }

    fn eval(&self, y: &ManifoldPoint) -> Result<f64> {
        match self {
            Slice::Minimization { f, fz } => Ok(f.evaluate(y)? - fz),
            Slice::Regularized { base, lambda, ray } => {
                let b = match ray {
                    Some((d, r)) => d * busemann::busemann(r, y)?,
                    None => 0.0,
                };
                Ok(lambda * base.eval(y)? + b)
            }
            Slice::Generic { f, z } => f.evaluate(z, y),
        }
    }

    /// Magnitude of the cancelling terms, for rounding-noise thresholds.
    fn scale(&self) -> f64 {
        match self {
            Slice::Minimization { fz, .. } => fz.abs(),
            Slice::Regularized { base, lambda, ray } => {
                lambda * base.scale() + ray.as_ref().map_or(0.0, |(d, _)| d * (1.0 + d))
            }
            Slice::Generic { .. } => 1.0,
        }
    }

    fn grad(&self, y: &ManifoldPoint) -> Result<TangentVector> {
        match self {
            Slice::Minimization { f, .. } => f.gradient(y),
            Slice::Regularized { base, lambda, ray } => {
                let g = base.grad(y)?.scale(*lambda);
                match ray {
                    Some((d, r)) => g.add(&busemann::busemann_gradient(r, y)?.scale(*d)),
                    None => Ok(g),
                }
            }
            Slice::Generic { f, z } => match f {
                Bifunction::VectorField { .. } => f.grad_y(z, y),
                _ => manifolds::numeric_gradient(y, GRADIENT_STEP, |p| f.evaluate(z, p)),
            },
        }
    }
}

/// Projected Riemannian gradient descent with Armijo backtracking.
/// Once the Armijo decrease drops below rounding noise, steps are judged
/// by whether they shrink the gradient instead, so the minimizer is
/// located well below the square root of machine precision.
fn minimize(
    slice: &Slice,
    omega: &ConvexBody,
    start: &ManifoldPoint,
    max_iters: usize,
    proj: &SolverConfig,
) -> Result<(ManifoldPoint, f64, f64)> {
    let mut y = convexity::project(omega, start, proj)?;
    let mut val = slice.eval(&y)?;
    let mut g = slice.grad(&y)?;
    let mut s = 1.0;
    let noise = NOISE * (1.0 + slice.scale());
    let curved = !matches!(y.manifold(), Manifold::Euclidean(_));
    for _ in 0..max_iters {
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let len = if curved { (s * gn).min(CURVED_REACH) } else { s * gn };
            let cand = convexity::project(omega, &manifolds::exp(&y, &g.scale(-len / gn))?, proj)?;
            let step = manifolds::distance(&y, &cand)?;
            if step <= STEP_TOL {
                break;
            }
            let cv = slice.eval(&cand)?;
            let tie = noise * (1.0 + val.abs());
            let decrease = ARMIJO * step * step / s;
            if decrease > tie && cv <= val - decrease {
                accepted = Some((cand, cv, step, None));
                break;
            }
            if cv <= val + tie {
                let cg = slice.grad(&cand)?;
                if cg.norm() < gn {
                    accepted = Some((cand, cv, step, Some(cg)));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((cand, cv, step, cg)) = accepted else {
            break;
        };
        y = cand;
        val = cv;
        g = match cg {
            Some(cg) => cg,
            None => slice.grad(&y)?,
        };
        if step / s <= 1e-13 {
            break;
        }
        s = (2.0 * s).min(1e6);
    }
    // Length of the projected unit gradient step; zero at a minimizer.
    let stationarity = manifolds::distance(&y, &convexity::project(omega, &manifolds::exp(&y, &g.scale(-1.0))?, proj)?)?;
    Ok((y, val, stationarity))
}

fn seeded_starts(omega: &ConvexBody, count: usize, seed: u64) -> Result<Vec<ManifoldPoint>> {
    let mut rng = sampling::rng(seed);
    (0..count).map(|_| omega.sample_member(&mut rng)).collect()
}

/// Approximate `argmin_{y ∈ Ω} F(z, y)` from `z`, an optional warm start
/// and seeded random members; returns the best point and its value.
pub fn best_response(
    f: &Bifunction,
    omega: &ConvexBody,
    z: &ManifoldPoint,
    warm: Option<&ManifoldPoint>,
    cfg: &EpConfig,
    seed: u64,
) -> Result<(ManifoldPoint, f64)> {
    let slice = Slice::new(f, z)?;
    let proj = cfg.projection();
    let mut starts = vec![warm.unwrap_or(z).clone()];
    starts.extend(seeded_starts(omega, cfg.inner_samples.saturating_sub(1), seed)?);
    let noise = NOISE * (1.0 + slice.scale());
    let mut best: Option<(ManifoldPoint, f64, f64)> = None;
    for s in &starts {
        let (y, v, st) = minimize(&slice, omega, s, cfg.max_iters, &proj)?;
        // Values within rounding noise are ranked by stationarity.
        let better = best.as_ref().is_none_or(|(_, bv, bst)| {
            let tie = noise * (1.0 + bv.abs());
            v < bv - tie || (v <= bv + tie && st < *bst)
        });
        if better {
            best = Some((y, v, st));
        }
    }
    let (y, v, _) = best.expect("at least one start");
    Ok((y, v))
}

/// Estimate of `inf_{y ∈ Ω} F(z, y)`. It is never positive, and a value
/// `≥ -tol` certifies `z` as an approximate equilibrium point.
pub fn ep_residual(f: &Bifunction, omega: &ConvexBody, z: &ManifoldPoint, cfg: &EpConfig) -> Result<f64> {
    if omega.violation(z)? > cfg.tol {
        return Err(Error::OutOfRange("ep_residual needs z in omega".into()));
    }
    let (_, mut v) = best_response(f, omega, z, None, cfg, cfg.seed)?;
    // A boundary point in the steepest descent direction.
    let g = f.grad_y(z, z)?;
    if g.norm() > 0.0 {
        let reach = if matches!(z.manifold(), Manifold::Euclidean(_)) { 1e3 } else { CURVED_REACH };
        let far = manifolds::exp(z, &g.scale(-reach / g.norm()))?;
        let corner = convexity::project(omega, &far, &cfg.projection())?;
        v = v.min(f.evaluate(z, &corner)?);
    }
    Ok(v.min(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventResult {
    pub point: ManifoldPoint,
    /// `-F_{λ,x}(z, y*(z))`, the negated regularized residual.
    pub merit: f64,
    /// `d(z, y*(z))` for the best response `y*(z)`.
    pub fixed_point_residual: f64,
    pub iterations: usize,
    pub beta: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(LAMBDA_RANGE.0..=LAMBDA_RANGE.1).contains(&lambda) {
        return Err(Error::OutOfRange(format!(
            "lambda = {lambda} outside [{}, {}]",
            LAMBDA_RANGE.0, LAMBDA_RANGE.1
        )));
    }
    Ok(())
}

/// The resolvent `J_λ(x)` by a damped fixed-point iteration on the best
/// response `y*(z) = argmin_{y ∈ Ω} F_{λ,x}(z, y)`: `z ← γ_{z, y*}(β)`
/// with `β = 1/2`, halved whenever a step fails to improve. The seed in
/// `cfg` picks the starting point and the inner starts.
pub fn resolvent(instance: &EPInstance, lambda: f64, x: &ManifoldPoint, cfg: &EpConfig) -> Result<ResolventResult> {
    check_lambda(lambda)?;
    if !instance.is_monotone() {
        return Err(Error::OutOfRange(format!(
            "resolvent needs a monotone bifunction, got {}",
            instance.bifunction().name()
        )));
    }
    let omega = instance.omega();
    let reg = Bifunction::regularized(instance.bifunction().clone(), lambda, x.clone())?;
    let proj = cfg.projection();

    let mut rng = sampling::rng(cfg.seed);
    let jitter = if cfg.seed == 0 { 0.0 } else { 0.5 };
    let mut z = convexity::project(omega, &sampling::random_point_near(&mut rng, x, jitter), &proj)?;
    let (mut y, v) = best_response(&reg, omega, &z, None, cfg, cfg.seed)?;
    let mut scale = Slice::new(&reg, &z)?.scale();
    let mut merit = -v;
    let mut fp = manifolds::distance(&z, &y)?;
    let mut beta = 0.5;
    let mut iters = 0;
    while !(fp <= cfg.tol && merit <= cfg.tol) {
        if iters >= cfg.max_iters {
            return Err(Error::non_convergence("resolvent", iters, fp.max(merit), Some(z)));
        }
        iters += 1;
        let zn = manifolds::geodesic(&z, &y, beta)?;
        let seed = cfg.seed.wrapping_add(iters as u64);
        let (yn, vn) = best_response(&reg, omega, &zn, Some(&y), cfg, seed)?;
        let mn = -vn;
        let fpn = manifolds::distance(&zn, &yn)?;
        let noise = NOISE * (1.0 + merit.abs() + scale);
        let improved = mn < merit - noise || (mn <= merit + noise && fpn < fp);
        if improved || beta < 1e-8 {
            z = zn;
            y = yn;
            merit = mn;
            fp = fpn;
            scale = Slice::new(&reg, &z)?.scale();
        } else {
            beta *= 0.5;
        }
    }
    Ok(ResolventResult {
        point: z,
        merit,
        fixed_point_residual: fp,
        iterations: iters,
        beta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub iterates: Vec<ManifoldPoint>,
    /// Residual of the original bifunction at each iterate.
    pub residuals: Vec<f64>,
    /// `f(x_k)` for minimization instances.
    pub objective: Option<Vec<f64>>,
    pub converged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &ManifoldPoint {
        self.iterates.last().expect("trajectories start with x0")
    }

    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// A failed proximal point run with the iterates computed so far.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("proximal point failed after {} iterations: {error}", partial.iterations())]
pub struct PpaFailure {
    pub error: Error,
    pub partial: Trajectory,
}

/// `x_{k+1} = J_λ(x_k)` for at most `iters` steps, stopping once the
/// residual of the original bifunction is at least `-cfg.tol`.
pub fn proximal_point(
    instance: &EPInstance,
    lambda: f64,
    x0: &ManifoldPoint,
    iters: usize,
    cfg: &EpConfig,
) -> Result<Trajectory, PpaFailure> {
    let f = instance.bifunction();
    let objective = match f {
        Bifunction::Minimization { f } => Some(f),
        _ => None,
    };
    let mut traj = Trajectory {
        iterates: vec![x0.clone()],
        residuals: Vec::new(),
        objective: objective.map(|_| Vec::new()),
        converged: false,
    };
    let fail = |error: Error, traj: &Trajectory| PpaFailure {
        error,
        partial: traj.clone(),
    };
    let record = |traj: &mut Trajectory, x: &ManifoldPoint| -> Result<f64> {
        let r = ep_residual(f, instance.omega(), x, cfg)?;
        traj.residuals.push(r);
        if let (Some(obj), Some(g)) = (traj.objective.as_mut(), objective) {
            obj.push(g.evaluate(x)?);
        }
        Ok(r)
    };
    check_lambda(lambda).map_err(|e| fail(e, &traj))?;
    let mut r = record(&mut traj, x0).map_err(|e| fail(e, &traj))?;
    let mut x = x0.clone();
    for _ in 0..iters {
        if r >= -cfg.tol {
            break;
        }
        let next = resolvent(instance, lambda, &x, cfg).map_err(|e| fail(e, &traj))?;
        x = next.point;
        traj.iterates.push(x.clone());
        r = record(&mut traj, &x).map_err(|e| fail(e, &traj))?;
    }
    traj.converged = r >= -cfg.tol;
    Ok(traj)
}
