//! Sampling harness for the Helly-type intersection theorem.
//!
//! Each trial draws a family of geodesic balls, tests every
//! `(dim + 1)`-subfamily for a common point and, when all of them
//! intersect, checks that the whole family does.

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use super::{feasibility, ConvexBody, SolverConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::manifolds::{self, Manifold};
use crate::sampling;

/// How a trial family was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HellyArm {
    /// Every ball contains a seeded common point.
    CommonPoint,
    /// The common-point construction with radii shrunk by random factors.
    Jitter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HellyTrial {
    pub index: usize,
    pub arm: HellyArm,
    pub subsets_tested: usize,
    /// Largest merit over the tested subfamilies.
    pub worst_subset_merit: f64,
    pub hypothesis: bool,
    /// Merit of the whole family; only computed when the hypothesis holds.
    pub total_merit: Option<f64>,
    pub conclusion: Option<bool>,
}

impl HellyTrial {
    pub fn is_violation(&self) -> bool {
        self.hypothesis && self.conclusion == Some(false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArmSummary {
    pub families: usize,
    pub hypothesis_held: usize,
    pub hypothesis_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HellyReport {
    pub manifold: Manifold,
    pub dim: usize,
    pub num_bodies: usize,
    pub subset_size: usize,
    pub seed: u64,
    pub families_tested: usize,
    pub hypothesis_held: usize,
    pub conclusion_held: usize,
    /// Families whose hypothesis failed; skipped, not violations.
    pub skipped: usize,
    pub violations: usize,
    pub common_point_arm: ArmSummary,
    pub jitter_arm: ArmSummary,
    pub max_total_merit: f64,
    #[serde(skip)]
    pub trials: Vec<HellyTrial>,
}

impl HellyReport {
    /// Per-trial merits as CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.trials {
            w.serialize(t).map_err(|e| Error::Numerical(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Tests one family: every `subset_size`-subfamily, then the whole family
/// if all of those intersect.
pub fn check_helly_family(
    bodies: &[ConvexBody],
    subset_size: usize,
    cfg: &SolverConfig,
) -> Result<(usize, f64, bool, Option<f64>)> {
    let mut tested = 0;
    let mut worst = f64::NEG_INFINITY;
    for combo in (0..bodies.len()).combinations(subset_size.min(bodies.len())) {
        let sub: Vec<ConvexBody> = combo.iter().map(|&i| bodies[i].clone()).collect();
        let r = feasibility(&sub, cfg)?;
        tested += 1;
        worst = worst.max(r.merit);
        if r.merit > cfg.tol {
            return Ok((tested, worst, false, None));
        }
    }
    let total = feasibility(bodies, cfg)?;
    Ok((tested, worst, true, Some(total.merit)))
}

fn draw_family(
    manifold: Manifold,
    num_bodies: usize,
    seed: u64,
) -> Result<(HellyArm, Vec<ConvexBody>)> {
    let mut rng = sampling::rng(seed);
    let arm = if rng.random::<bool>() {
        HellyArm::CommonPoint
    } else {
        HellyArm::Jitter
    };
    let p = sampling::random_point(&mut rng, manifold, 1.0);
    let mut bodies = Vec::with_capacity(num_bodies);
    for _ in 0..num_bodies {
        let c = sampling::random_point_near(&mut rng, &p, 2.0);
        let mut r = manifolds::distance(&c, &p)? + rng.random_range(0.05..0.5);
        if arm == HellyArm::Jitter {
            r *= rng.random_range(0.3..1.0);
        }
        bodies.push(ConvexBody::ball(c, r)?);
    }
    Ok((arm, bodies))
}

/// Runs `trials` seeded families of `num_bodies` balls on `manifold`;
/// trial `i` uses seed `seed + i`.
pub fn helly_check(
    manifold: Manifold,
    num_bodies: usize,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<HellyReport> {
    let dim = manifold.dim();
    if num_bodies <= dim + 1 {
        return Err(Error::OutOfRange(format!(
            "num_bodies = {num_bodies} must exceed dim + 1 = {}",
            dim + 1
        )));
    }
    let cfg = SolverConfig::default();
    let rows = exec.map_range(trials, |i| -> Result<HellyTrial> {
        let (arm, bodies) = draw_family(manifold, num_bodies, seed.wrapping_add(i as u64))?;
        let (subsets_tested, worst, hypothesis, total) = check_helly_family(&bodies, dim + 1, &cfg)?;
        Ok(HellyTrial {
            index: i,
            arm,
            subsets_tested,
            worst_subset_merit: worst,
            hypothesis,
            total_merit: total,
            conclusion: total.map(|m| m <= cfg.tol),
        })
    });
    let trials: Vec<HellyTrial> = rows.into_iter().collect::<Result<_>>()?;

    let summarize = |arm: HellyArm| {
        let families = trials.iter().filter(|t| t.arm == arm).count();
        let held = trials.iter().filter(|t| t.arm == arm && t.hypothesis).count();
        ArmSummary {
            families,
            hypothesis_held: held,
            hypothesis_rate: if families == 0 { 0.0 } else { held as f64 / families as f64 },
        }
    };
    let hypothesis_held = trials.iter().filter(|t| t.hypothesis).count();
    Ok(HellyReport {
        manifold,
        dim,
        num_bodies,
        subset_size: dim + 1,
        seed,
        families_tested: trials.len(),
        hypothesis_held,
        conclusion_held: trials.iter().filter(|t| t.conclusion == Some(true)).count(),
        skipped: trials.len() - hypothesis_held,
        violations: trials.iter().filter(|t| t.is_violation()).count(),
        common_point_arm: summarize(HellyArm::CommonPoint),
        jitter_arm: summarize(HellyArm::Jitter),
        max_total_merit: trials
            .iter()
            .filter_map(|t| t.total_merit)
            .fold(f64::NEG_INFINITY, f64::max),
        trials,
    })
}
