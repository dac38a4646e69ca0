//! Sampled falsification probes for monotonicity and the standing
//! assumptions on equilibrium problems. None of these prove anything; a
//! clean report only means no counterexample was sampled.

use serde::Serialize;

use super::{Bifunction, EPInstance};
use crate::convexity::{self, hull_iterate, ConvexBody, Region};
use crate::error::Result;
use crate::manifolds::{self, ManifoldPoint};
use crate::sampling;

/// `F(x, y) + F(y, x) ≤ MONOTONE_TOL` counts as monotone.
pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    /// Largest sampled `F(x, y) + F(y, x)`.
    pub max_sum: f64,
    pub monotone: bool,
    /// Pairs with `F(x, y) ≥ 0` but `F(y, x) > tol`.
    pub pseudomonotone_violations: usize,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Samples pairs in `omega` and reports the worst monotonicity sum.
pub fn monotonicity_check(f: &Bifunction, omega: &ConvexBody, trials: usize, seed: u64) -> Result<MonotonicityReport> {
    let mut rng = sampling::rng(seed);
    let mut max_sum = f64::NEG_INFINITY;
    let mut worst = None;
    let mut pseudo = 0;
    for _ in 0..trials {
        let x = omega.sample_member(&mut rng)?;
        let y = omega.sample_member(&mut rng)?;
        let a = f.evaluate(&x, &y)?;
        let b = f.evaluate(&y, &x)?;
        if a + b > max_sum {
            max_sum = a + b;
            worst = Some((x.to_vec(), y.to_vec()));
        }
        if (a >= 0.0 && b > MONOTONE_TOL) || (b >= 0.0 && a > MONOTONE_TOL) {
            pseudo += 1;
        }
    }
    Ok(MonotonicityReport {
        trials,
        max_sum,
        monotone: max_sum <= MONOTONE_TOL,
        pseudomonotone_violations: pseudo,
        worst_pair: worst,
    })
}

/// Probe of the coercivity condition: along sampled divergent sequences
/// `z^k` some candidate `x*` satisfies `F(z^k, x*) ≤ tol` for every `k`
/// in the upper half of the schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceProbe {
    pub sequences: usize,
    pub satisfied: usize,
    pub k0: f64,
    /// Bounded `Ω` admits no divergent sequence, so the condition holds
    /// trivially; the probe still runs on the projected sequences.
    pub vacuous: bool,
}

/// Probe of the hull covering condition: hull points of `y_1..y_{n+1}`
/// sampled in `Ω_k` must lie in some `L_F(k, y_i) = {x : F(y_i, x) ≤ tol}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullCoverProbe {
    pub families: usize,
    pub hull_points_tested: usize,
    pub violations: usize,
}

/// Probe of convexity of the strict sublevel sets `{x : F(y, x) < 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityProbe {
    pub pairs_tested: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub monotonicity: MonotonicityReport,
    pub divergence: DivergenceProbe,
    pub hull_cover: HullCoverProbe,
    pub sublevel_convexity: ConvexityProbe,
}

fn bounded(body: &ConvexBody) -> bool {
    match body {
        ConvexBody::Ball { .. } => true,
        ConvexBody::HalfSpace { .. } => false,
        ConvexBody::Intersection { members } => members.iter().any(bounded),
    }
}

/// Runs every probe with `trials` samples each; `k_list` gives the radii
/// of `Ω_k = {x ∈ Ω : d(x, z0) ≤ k}` and the divergence schedule.
pub fn check_assumptions(
    instance: &EPInstance,
    z0: &ManifoldPoint,
    k_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    let f = instance.bifunction();
    let omega = instance.omega();
    let tol = instance.solver().tol;
    let proj = instance.solver().projection();
    let mut rng = sampling::rng(seed);
    let monotonicity = monotonicity_check(f, omega, trials, seed.wrapping_add(1))?;

    let mut ks: Vec<f64> = k_list.iter().copied().filter(|k| *k > 0.0).collect();
    ks.sort_by(f64::total_cmp);
    let k0 = ks.get(ks.len() / 2).copied().unwrap_or(0.0);
    let tail: Vec<f64> = ks.iter().copied().filter(|k| *k >= k0).collect();

    let mut candidates = vec![convexity::project(omega, z0, &proj)?];
    for _ in 0..trials {
        candidates.push(omega.sample_member(&mut rng)?);
    }
    let mut satisfied = 0;
    let sequences = if tail.is_empty() { 0 } else { trials };
    for _ in 0..sequences {
        let u = sampling::random_unit_tangent(&mut rng, z0);
        let zs = tail
            .iter()
            .map(|k| convexity::project(omega, &manifolds::exp(z0, &u.scale(*k))?, &proj))
            .collect::<Result<Vec<_>>>()?;
        let mut found = false;
        for c in &candidates {
            let mut ok = true;
            for z in &zs {
                if f.evaluate(z, c)? > tol {
                    ok = false;
                    break;
                }
            }
            if ok {
                found = true;
                break;
            }
        }
        satisfied += usize::from(found);
    }
    let divergence = DivergenceProbe {
        sequences,
        satisfied,
        k0,
        vacuous: bounded(omega),
    };

    let n = instance.manifold().dim();
    let mut hull_cover = HullCoverProbe {
        families: 0,
        hull_points_tested: 0,
        violations: 0,
    };
    if !ks.is_empty() {
        for t in 0..trials {
            let k = ks[t % ks.len()];
            let omega_k = ConvexBody::intersection(vec![omega.clone(), ConvexBody::ball(z0.clone(), k)?])?;
            let Ok(ys) = (0..=n).map(|_| omega_k.sample_member(&mut rng)).collect::<Result<Vec<_>>>() else {
                continue;
            };
            hull_cover.families += 1;
            let hull = hull_iterate(&ys, 2, 4, seed.wrapping_add(t as u64))?;
            for x in hull.all_samples() {
                hull_cover.hull_points_tested += 1;
                let mut covered = false;
                for y in &ys {
                    if f.evaluate(y, x)? <= tol {
                        covered = true;
                        break;
                    }
                }
                hull_cover.violations += usize::from(!covered);
            }
        }
    }

    let mut sublevel_convexity = ConvexityProbe {
        pairs_tested: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let y = omega.sample_member(&mut rng)?;
        let mut members = Vec::with_capacity(2);
        for _ in 0..50 {
            let x = omega.sample_member(&mut rng)?;
            if f.evaluate(&y, &x)? < 0.0 {
                members.push(x);
                if members.len() == 2 {
                    break;
                }
            }
        }
        let [a, b] = members.as_slice() else {
            continue;
        };
        sublevel_convexity.pairs_tested += 1;
        for t in [0.25, 0.5, 0.75] {
            if f.evaluate(&y, &manifolds::geodesic(a, b, t)?)? >= tol {
                sublevel_convexity.violations += 1;
                break;
            }
        }
    }

    Ok(AssumptionReport {
        monotonicity,
        divergence,
        hull_cover,
        sublevel_convexity,
    })
}
