//! Seeded property suites.
//!
//! Every suite draws its random inputs from `seed + index`, where `index`
//! is the suite's position in [`SUITES`], and trial `i` inside a suite
//! uses its own stream. Reports are therefore identical across runs and
//! across sequential and parallel execution.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::busemann::{self, make_ray};
use crate::combinations::{
    self, commutative_combination, jensen_at, karcher_mean, permutation_orbit, pseudo_combination,
    CombinationMode, KarcherConfig, SimplexWeights,
};
use crate::convexity::{self, convexity_probe, helly_check, hull_iterate, Annulus, ConvexBody, Region, SolverConfig};
use crate::equilibrium::{self, monotonicity_check, proximal_point, resolvent, Bifunction, EPInstance, EpConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::functions::ConvexFunction;
use crate::manifolds::{self, Manifold, ManifoldPoint, TangentVector};
use crate::sampling::{self, SuiteRng};

/// Suite names in seed order.
pub const SUITES: [&str; 9] = [
    "geometry",
    "busemann",
    "convexity",
    "helly",
    "jensen",
    "combinations",
    "monotone",
    "resolvent",
    "ppa",
];

/// One property checked over many samples: it passes when every
/// measured value is at most `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub failures: usize,
    /// Largest measured value; compare with `tol`.
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn from_values(name: impl Into<String>, values: &[f64], tol: f64) -> Self {
        let failures = values.iter().filter(|v| !(**v <= tol)).count();
        let worst = values.iter().copied().fold(f64::NEG_INFINITY, |a, b| {
            if b.is_nan() {
                f64::INFINITY
            } else {
                a.max(b)
            }
        });
        Check {
            name: name.into(),
            samples: values.len(),
            failures,
            worst,
            tol,
            passed: failures == 0 && !values.is_empty(),
        }
    }

    /// A check with a single boolean outcome.
    pub fn flag(name: impl Into<String>, ok: bool, value: f64) -> Self {
        Check {
            name: name.into(),
            samples: 1,
            failures: usize::from(!ok),
            worst: value,
            tol: f64::NAN,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub failures: usize,
    pub checks: Vec<Check>,
    /// Suite-specific summary data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl SuiteReport {
    fn new(name: &str, seed: u64, trials: usize, checks: Vec<Check>, details: Option<serde_json::Value>) -> Self {
        let failures = checks.iter().filter(|c| !c.passed).count();
        SuiteReport {
            name: name.into(),
            seed,
            trials,
            passed: failures == 0,
            failures,
            checks,
            details,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub seed: u64,
    pub passed: bool,
    /// Number of failed checks over all suites.
    pub failures: usize,
    pub suites: Vec<SuiteReport>,
}

/// Expands `"all"` and validates names against [`SUITES`].
pub fn resolve_names(names: &[String]) -> Result<Vec<&'static str>> {
    if names.is_empty() {
        return Err(Error::OutOfRange(format!("no suites given; valid: all, {}", SUITES.join(", "))));
    }
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(SUITES);
            continue;
        }
        match SUITES.iter().find(|s| **s == n.as_str()) {
            Some(s) => out.push(*s),
            None => {
                return Err(Error::OutOfRange(format!(
                    "unknown suite {n:?}; valid: all, {}",
                    SUITES.join(", ")
                )))
            }
        }
    }
    let mut seen = Vec::new();
    out.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(*s);
        fresh
    });
    Ok(out)
}

/// Runs the named suites. `trials` overrides each suite's default count.
pub fn verify_suites(names: &[String], trials: Option<usize>, seed: u64, exec: Exec) -> Result<AggregateReport> {
    let names = resolve_names(names)?;
    let mut suites = Vec::with_capacity(names.len());
    for name in names {
        suites.push(run_suite(name, trials, seed, exec)?);
    }
    let failures = suites.iter().map(|s| s.failures).sum();
    Ok(AggregateReport {
        seed,
        passed: failures == 0,
        failures,
        suites,
    })
}

/// Runs one suite with its derived seed.
pub fn run_suite(name: &str, trials: Option<usize>, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let index = SUITES
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| Error::OutOfRange(format!("unknown suite {name:?}")))?;
    let s = seed.wrapping_add(index as u64);
    match name {
        "geometry" => geometry(trials.unwrap_or(1000), s, exec),
        "busemann" => busemann_suite(trials.unwrap_or(1000), s, exec),
        "convexity" => convexity_suite(trials.unwrap_or(200), s, exec),
        "helly" => helly(trials.unwrap_or(200), s, exec),
        "jensen" => jensen(trials.unwrap_or(500), s, exec),
        "combinations" => combinations_suite(trials.unwrap_or(10), s, exec),
        "monotone" => monotone(trials.unwrap_or(1000), s, exec),
        "resolvent" => resolvent_suite(trials.unwrap_or(3), s, exec),
        "ppa" => ppa(trials.unwrap_or(2), s, exec),
        _ => unreachable!("names come from SUITES"),
    }
}

/// Runs `trials` seeded trials, each returning one value per check, and
/// collects the values column-wise.
fn columns<F>(exec: Exec, trials: usize, seed: u64, width: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut SuiteRng) -> Result<Vec<f64>> + Sync + Send,
{
    let rows = exec.map_range(trials, |i| f(&mut sampling::rng(seed.wrapping_add(i as u64))));
    let mut cols = vec![Vec::with_capacity(trials); width];
    for row in rows {
        let row = row?;
        debug_assert_eq!(row.len(), width);
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(cols)
}

fn d(a: &ManifoldPoint, b: &ManifoldPoint) -> Result<f64> {
    manifolds::distance(a, b)
}

// ---------------------------------------------------------------- geometry

/// Manifolds exercised by the geometry suite.
pub fn geometry_manifolds() -> [Manifold; 4] {
    [
        Manifold::Euclidean(5),
        Manifold::Hyperboloid(2),
        Manifold::Hyperboloid(5),
        Manifold::Spd(3),
    ]
}

pub fn geometry(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for (mi, m) in geometry_manifolds().into_iter().enumerate() {
        let cols = columns(exec, trials, seed.wrapping_add((mi as u64) << 32), 7, |rng| {
            let x = sampling::random_point(rng, m, 1.5);
            let y = sampling::random_point(rng, m, 1.5);
            let z = sampling::random_point(rng, m, 1.5);
            let w = sampling::random_point(rng, m, 1.5);
            let l = manifolds::log(&x, &y)?;
            let round = d(&manifolds::exp(&x, &l)?, &y)?;
            let dxy = d(&x, &y)?;
            let norm = (l.norm() - dxy).abs();
            let t: f64 = rng.random();
            let g = manifolds::geodesic(&x, &y, t)?;
            let cmp = d(&g, &z)?.powi(2)
                - ((1.0 - t) * d(&x, &z)?.powi(2) + t * d(&y, &z)?.powi(2) - t * (1.0 - t) * dxy * dxy);
            let tri = d(&x, &z)? - dxy - d(&y, &z)?;
            let along = (d(&x, &g)? - t * dxy).abs();
            let m1 = manifolds::geodesic(&x, &y, 0.5)?;
            let m2 = manifolds::geodesic(&z, &w, 0.5)?;
            let mid = d(&m1, &m2)? - 0.5 * (d(&x, &z)? + d(&y, &w)?);
            let h = 1e-4;
            let xp = sampling::random_point_near(rng, &x, h);
            let yp = sampling::random_point_near(rng, &y, h);
            let moved = (manifolds::log(&xp, &yp)?.vec() - l.vec()).norm();
            let slope = moved / h.max(d(&x, &xp)? + d(&y, &yp)?);
            Ok(vec![round, norm, cmp, tri, along, mid, slope])
        })?;
        let tag = m.to_string();
        checks.push(Check::from_values(format!("{tag}/round_trip"), &cols[0], 1e-8));
        checks.push(Check::from_values(format!("{tag}/log_norm"), &cols[1], 1e-9));
        checks.push(Check::from_values(format!("{tag}/comparison"), &cols[2], 1e-8));
        checks.push(Check::from_values(format!("{tag}/triangle"), &cols[3], 1e-9));
        checks.push(Check::from_values(format!("{tag}/geodesic_speed"), &cols[4], 1e-8));
        checks.push(Check::from_values(format!("{tag}/distance_convexity"), &cols[5], 1e-9));
        checks.push(Check::from_values(format!("{tag}/log_continuity"), &cols[6], 1e3));
    }
    Ok(SuiteReport::new("geometry", seed, trials, checks, None))
}

// ---------------------------------------------------------------- busemann

/// Upper-semicontinuity envelope `ε(h)`: the largest increase of
/// `b_{γ_{z,x}}(y)` over `perturbations` perturbed triples within `h`.
pub fn usc_envelope(
    m: Manifold,
    radii: &[f64],
    bases: usize,
    perturbations: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>> {
    let per_base = exec.map_range(bases, |i| -> Result<Vec<f64>> {
        let mut rng = sampling::rng(seed.wrapping_add(i as u64));
        let z = sampling::random_point(&mut rng, m, 1.5);
        let x = sampling::random_point_near(&mut rng, &z, 2.0);
        let y = sampling::random_point(&mut rng, m, 1.5);
        let b0 = busemann::busemann(&make_ray(&z, &x)?, &y)?;
        radii
            .iter()
            .map(|&h| {
                let mut eps = 0.0f64;
                for _ in 0..perturbations {
                    let xp = sampling::random_point_near(&mut rng, &x, h);
                    let zp = sampling::random_point_near(&mut rng, &z, h);
                    let yp = sampling::random_point_near(&mut rng, &y, h);
                    eps = eps.max(busemann::busemann(&make_ray(&zp, &xp)?, &yp)? - b0);
                }
                Ok(eps)
            })
            .collect()
    });
    let mut env = vec![0.0f64; radii.len()];
    for row in per_base {
        for (e, v) in env.iter_mut().zip(row?) {
            *e = e.max(v);
        }
    }
    Ok(env)
}

pub fn busemann_suite(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let m = Manifold::Hyperboloid(2);
    let cols = columns(exec, trials, seed, 6, |rng| {
        let z = sampling::random_point(rng, m, 1.5);
        let x = sampling::random_point_near(rng, &z, 2.0);
        if d(&z, &x)? <= busemann::COINCIDENT_TOL {
            return Ok(vec![0.0; 6]);
        }
        let ray = make_ray(&z, &x)?;
        let y = sampling::random_point(rng, m, 2.0);
        let y2 = sampling::random_point(rng, m, 2.0);
        let b = busemann::busemann(&ray, &y)?;
        let lim = busemann::busemann_limit_default(&ray, &y, 1e-9)?;
        let b2 = busemann::busemann(&ray, &y2)?;
        let lip = (b - b2).abs() - d(&y, &y2)?;
        let mid = busemann::busemann(&ray, &manifolds::geodesic(&y, &y2, 0.5)?)?;
        let conv = mid - 0.5 * (b + b2);
        let bound = b - (d(&y, &x)? - d(&z, &x)?);
        let origin = busemann::busemann(&ray, &z)?.abs();
        Ok(vec![(b - lim).abs(), lip, conv, bound, origin, 0.0])
    })?;
    let mut checks = vec![
        Check::from_values("closed_form_vs_limit", &cols[0], 1e-6),
        Check::from_values("lipschitz", &cols[1], 1e-8),
        Check::from_values("geodesic_convexity", &cols[2], 1e-8),
        Check::from_values("upper_bound", &cols[3], 1e-8),
        Check::from_values("vanishes_at_origin", &cols[4], 1e-8),
    ];

    let radii = [1e-2, 1e-3, 1e-4];
    let env = usc_envelope(m, &radii, 10, 100, seed.wrapping_add(1 << 40), exec)?;
    let decreasing = env[0] > env[1] && env[1] > env[2];
    checks.push(Check::flag("usc_envelope_decreasing", decreasing, env[2]));

    let flat = flat_regularizer_values(trials, seed.wrapping_add(2 << 40), exec)?;
    checks.push(Check::from_values("flat_regularizer_identity", &flat, 1e-9));
    let details = serde_json::json!({ "usc_radii": radii, "usc_envelope": env });
    Ok(SuiteReport::new("busemann", seed, trials, checks, Some(details)))
}

/// `|d(z,x) b_{γ_{z,x}}(y) - ⟨z - x, y - z⟩|` on random triples in `R^3`.
pub fn flat_regularizer_values(trials: usize, seed: u64, exec: Exec) -> Result<Vec<f64>> {
    let m = Manifold::Euclidean(3);
    let cols = columns(exec, trials, seed, 1, |rng| {
        let z = sampling::random_point(rng, m, 3.0);
        let x = sampling::random_point(rng, m, 3.0);
        let y = sampling::random_point(rng, m, 3.0);
        let want = (z.coords() - x.coords()).dot(&(y.coords() - z.coords()));
        Ok(vec![(busemann::regularizer(&z, &x, &y)? - want).abs()])
    })?;
    Ok(cols.into_iter().next().unwrap_or_default())
}

// --------------------------------------------------------------- convexity

pub fn convexity_suite(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let cfg = SolverConfig::default();
    let mut checks = Vec::new();
    for (mi, m) in [Manifold::Euclidean(2), Manifold::Hyperboloid(2)].into_iter().enumerate() {
        let cols = columns(exec, trials, seed.wrapping_add((mi as u64) << 32), 3, |rng| {
            let c = sampling::random_point(rng, m, 1.0);
            let body = match rng.random_range(0..3) {
                0 => ConvexBody::ball(c.clone(), rng.random_range(0.3..1.5))?,
                1 => {
                    let n = sampling::random_unit_tangent(rng, &c);
                    ConvexBody::half_space(c.clone(), n)?
                }
                _ => {
                    let c2 = sampling::random_point_near(rng, &c, 1.0);
                    ConvexBody::intersection(vec![
                        ConvexBody::ball(c.clone(), 1.0)?,
                        ConvexBody::ball(c2, 1.0)?,
                    ])?
                }
            };
            let x = sampling::random_point_near(rng, &c, 3.0);
            let p = convexity::project(&body, &x, &cfg)?;
            let lp = manifolds::log(&p, &x)?;
            let mut obtuse = f64::NEG_INFINITY;
            let mut nearest = f64::NEG_INFINITY;
            let dx = d(&p, &x)?;
            for _ in 0..20 {
                let mem = body.sample_member(rng)?;
                obtuse = obtuse.max(manifolds::inner(&p, &lp, &manifolds::log(&p, &mem)?)?);
                nearest = nearest.max(dx - d(&mem, &x)?);
            }
            let a = sampling::random_point_near(rng, &c, 3.0);
            let b = sampling::random_point_near(rng, &c, 3.0);
            let da = convexity::dist_to_body(&body, &a, &cfg)?;
            let db = convexity::dist_to_body(&body, &b, &cfg)?;
            let dm = convexity::dist_to_body(&body, &manifolds::geodesic(&a, &b, 0.5)?, &cfg)?;
            Ok(vec![obtuse.max(body.violation(&p)?), nearest, dm - 0.5 * (da + db)])
        })?;
        let tag = m.to_string();
        checks.push(Check::from_values(format!("{tag}/projection_obtuse_angle"), &cols[0], cfg.tol));
        checks.push(Check::from_values(format!("{tag}/projection_nearest"), &cols[1], cfg.tol));
        checks.push(Check::from_values(format!("{tag}/distance_convexity"), &cols[2], 5.0 * cfg.tol));
    }

    let h = Manifold::Hyperboloid(2);
    let mut rng = sampling::rng(seed.wrapping_add(3 << 40));
    let center = sampling::random_point(&mut rng, h, 1.0);
    let ball = ConvexBody::ball(center.clone(), 1.2)?;
    let probe = convexity_probe(&ball, trials, seed.wrapping_add(4 << 40))?;
    checks.push(Check::flag("probe_hyperbolic_ball", probe.passed(), probe.max_segment_violation));
    let e0 = Manifold::Euclidean(2).origin();
    let hs = ConvexBody::half_space(e0.clone(), TangentVector::new(e0.clone(), vec![0.6, 0.8])?)?;
    let probe = convexity_probe(&hs, trials, seed.wrapping_add(5 << 40))?;
    checks.push(Check::flag("probe_flat_half_space", probe.passed(), probe.max_segment_violation));
    let ann = Annulus {
        center: e0,
        inner: 1.0,
        outer: 2.0,
    };
    let probe = convexity_probe(&ann, trials, seed.wrapping_add(6 << 40))?;
    checks.push(Check::flag("probe_annulus_flagged", !probe.passed(), probe.max_segment_violation));

    let gens: Vec<ManifoldPoint> = (0..3).map(|_| sampling::random_point(&mut rng, h, 1.5)).collect();
    let hull = hull_iterate(&gens, 4, 8, seed.wrapping_add(7 << 40))?;
    checks.push(Check::flag("hull_bounded", hull.within_bounding_ball(1e-9), hull.bounding_radius()));

    let p = sampling::random_point(&mut rng, h, 1.0);
    let bodies = (0..3)
        .map(|_| {
            let c = sampling::random_point_near(&mut rng, &p, 1.5);
            let r = d(&c, &p)? * rng.random_range(1.0..1.2) + 0.01;
            ConvexBody::ball(c, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let f = convexity::feasibility(&bodies, &cfg)?;
    checks.push(Check::from_values("feasibility_common_point", &[f.merit], cfg.tol));
    Ok(SuiteReport::new("convexity", seed, trials, checks, None))
}

// ------------------------------------------------------------------- helly

pub fn helly(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let report = helly_check(Manifold::Hyperboloid(2), 6, trials, seed, exec)?;
    let skipped_ok = report.skipped == report.families_tested - report.hypothesis_held
        && report.trials.iter().all(|t| t.hypothesis || t.conclusion.is_none());
    let checks = vec![
        Check::from_values("violations", &[report.violations as f64], 0.0),
        Check::flag("hypothesis_false_skipped", skipped_ok, report.skipped as f64),
        Check::flag(
            "conclusion_held_when_hypothesis_held",
            report.conclusion_held == report.hypothesis_held,
            report.max_total_merit,
        ),
    ];
    let details = serde_json::to_value(&report).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(SuiteReport::new("helly", seed, trials, checks, Some(details)))
}

// ------------------------------------------------------------------ jensen

/// Function kinds in the Jensen suite.
pub const JENSEN_FUNCTIONS: [&str; 3] = ["sq_dist", "busemann", "dist_to_body"];

fn jensen_functions(rng: &mut SuiteRng, m: Manifold) -> Result<Vec<ConvexFunction>> {
    let p = sampling::random_point(rng, m, 1.5);
    let z = sampling::random_point(rng, m, 1.5);
    let x = sampling::random_point_near(rng, &z, 2.0);
    let c = sampling::random_point(rng, m, 1.5);
    Ok(vec![
        ConvexFunction::sq_dist(p),
        ConvexFunction::busemann(make_ray(&z, &x)?),
        ConvexFunction::dist_to_body(ConvexBody::ball(c, 0.6)?)?,
    ])
}

pub fn jensen(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let karcher = KarcherConfig::default();
    let mut checks = Vec::new();
    for (mi, m) in [Manifold::Hyperboloid(2), Manifold::Spd(2)].into_iter().enumerate() {
        for n in 3..=5usize {
            let cell_seed = seed.wrapping_add(((mi * 8 + n) as u64) << 32);
            let cols = columns(exec, trials, cell_seed, 6, |rng| {
                let points: Vec<ManifoldPoint> = (0..n).map(|_| sampling::random_point(rng, m, 1.5)).collect();
                let w = SimplexWeights::normalized(&sampling::random_simplex(rng, n))?;
                let fs = jensen_functions(rng, m)?;
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                let pseudo = pseudo_combination(&points, &w, Some(&order))?;
                let comm = commutative_combination(&points, &w, &karcher, Exec::Sequential)?.point;
                let mut row = Vec::with_capacity(6);
                for f in &fs {
                    for (mode, at) in [(CombinationMode::Pseudo, &pseudo), (CombinationMode::Commutative, &comm)] {
                        let r = jensen_at(f, &points, &w, mode, at, 0.0)?;
                        row.push(r.lhs - r.rhs);
                    }
                }
                Ok(row)
            })?;
            for (fi, f) in JENSEN_FUNCTIONS.iter().enumerate() {
                for (k, mode) in ["pseudo", "commutative"].iter().enumerate() {
                    checks.push(Check::from_values(
                        format!("{m}/{f}/{mode}/N={n}"),
                        &cols[2 * fi + k],
                        1e-7,
                    ));
                }
            }
        }
    }
    Ok(SuiteReport::new("jensen", seed, trials, checks, None))
}

// ------------------------------------------------------------ combinations

pub fn combinations_suite(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let karcher = KarcherConfig::default();
    let h = Manifold::Hyperboloid(2);
    let mut checks = Vec::new();

    for n in 2..=4usize {
        let cols = columns(exec, trials, seed.wrapping_add((n as u64) << 32), 1, |rng| {
            let points: Vec<ManifoldPoint> = (0..n).map(|_| sampling::random_point(rng, h, 1.5)).collect();
            let alphas = sampling::random_simplex(rng, n);
            let base = commutative_combination(&points, &SimplexWeights::normalized(&alphas)?, &karcher, Exec::Sequential)?;
            let mut worst = 0.0f64;
            for perm in (0..n).permutations(n) {
                let p: Vec<_> = perm.iter().map(|&i| points[i].clone()).collect();
                let a: Vec<_> = perm.iter().map(|&i| alphas[i]).collect();
                let r = commutative_combination(&p, &SimplexWeights::normalized(&a)?, &karcher, Exec::Sequential)?;
                worst = worst.max(d(&r.point, &base.point)?);
            }
            Ok(vec![worst])
        })?;
        checks.push(Check::from_values(format!("permutation_invariance/N={n}"), &cols[0], 1e-6));
    }

    let e = Manifold::Euclidean(3);
    let cols = columns(exec, trials.max(20), seed.wrapping_add(10 << 32), 2, |rng| {
        let n = rng.random_range(2..=5usize);
        let points: Vec<ManifoldPoint> = (0..n).map(|_| sampling::random_point(rng, e, 2.0)).collect();
        let w = SimplexWeights::normalized(&sampling::random_simplex(rng, n))?;
        let mut mean = nalgebra::DVector::zeros(3);
        for (p, a) in points.iter().zip(w.alphas()) {
            mean += p.coords() * *a;
        }
        let pseudo = pseudo_combination(&points, &w, None)?;
        let comm = commutative_combination(&points, &w, &karcher, Exec::Sequential)?;
        Ok(vec![(pseudo.coords() - &mean).norm(), (comm.point.coords() - &mean).norm()])
    })?;
    checks.push(Check::from_values("euclidean_collapse/pseudo", &cols[0], 1e-10));
    checks.push(Check::from_values("euclidean_collapse/commutative", &cols[1], 1e-10));

    let mut rng = sampling::rng(seed.wrapping_add(11 << 32));
    let mut gm = Vec::new();
    let diag = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
    let mut mats = vec![diag];
    for _ in 0..trials {
        mats.push(sampling::random_point(&mut rng, Manifold::Spd(2), 1.5).as_matrix().expect("SPD point"));
    }
    let identity = Manifold::Spd(2).origin();
    for a in &mats {
        let inv = a.clone().try_inverse().ok_or_else(|| Error::Numerical("singular SPD sample".into()))?;
        let pts = [ManifoldPoint::spd(a)?, ManifoldPoint::spd(&inv)?];
        let r = commutative_combination(&pts, &SimplexWeights::uniform(2)?, &karcher, Exec::Sequential)?;
        gm.push((r.point.coords() - identity.coords()).norm());
    }
    checks.push(Check::from_values("spd_geometric_mean_identity", &gm, 1e-7));

    let cols = columns(exec, trials.max(20), seed.wrapping_add(12 << 32), 3, |rng| {
        let n = rng.random_range(3..=5usize);
        let c = sampling::random_point(rng, h, 1.0);
        let ball = ConvexBody::ball(c.clone(), 1.0)?;
        let points: Vec<ManifoldPoint> = (0..n).map(|_| sampling::random_point_near(rng, &c, 1.0)).collect();
        let w = SimplexWeights::normalized(&sampling::random_simplex(rng, n))?;
        let member = ball.violation(&pseudo_combination(&points, &w, None)?)?;
        let orbit = permutation_orbit(&points, &w, Exec::Sequential)?;
        let masses = SimplexWeights::uniform(orbit.len())?;
        let k = karcher_mean(&orbit.atoms, &masses, &karcher)?;
        let objective = |z: &ManifoldPoint| -> Result<f64> {
            let mut s = 0.0;
            for a in &orbit.atoms {
                s += d(z, a)?.powi(2);
            }
            Ok(s / orbit.len() as f64)
        };
        let at_mean = objective(&k.point)?;
        let mut excess = f64::NEG_INFINITY;
        for a in &orbit.atoms {
            excess = excess.max(at_mean - objective(a)?);
        }
        Ok(vec![member, k.grad_norm - karcher.tol, excess])
    })?;
    checks.push(Check::from_values("pseudo_membership", &cols[0], 1e-9));
    checks.push(Check::from_values("karcher_gradient_certificate", &cols[1], 0.0));
    checks.push(Check::from_values("karcher_objective_below_atoms", &cols[2], 1e-12));

    let pts = [
        ManifoldPoint::hyperboloid_from_spatial(&[0.2, 0.5])?,
        ManifoldPoint::hyperboloid_from_spatial(&[-1.0, 0.3])?,
        ManifoldPoint::hyperboloid_from_spatial(&[0.4, -0.9])?,
    ];
    let spread = permutation_orbit(&pts, &SimplexWeights::new(vec![0.2, 0.3, 0.5])?, exec)?.spread()?;
    checks.push(Check::flag("hyperbolic_orbit_not_commutative", spread > 1e-6, spread));
    let _ = combinations::MAX_ORBIT_POINTS;
    Ok(SuiteReport::new("combinations", seed, trials, checks, None))
}

// ---------------------------------------------------------------- monotone

pub fn monotone(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let h = Manifold::Hyperboloid(2);
    let cols = columns(exec, trials, seed, 4, |rng| {
        let c = sampling::random_point(rng, h, 1.5);
        let z0 = sampling::random_point(rng, h, 1.5);
        let x0 = sampling::random_point_near(rng, &z0, 2.0);
        let kinds = [
            Bifunction::minimization(ConvexFunction::half_sq_dist(c.clone())),
            Bifunction::minimization(ConvexFunction::busemann(make_ray(&z0, &x0)?)),
            Bifunction::log_to_point(c, -1.0),
        ];
        let x = sampling::random_point(rng, h, 2.0);
        let z = sampling::random_point(rng, h, 2.0);
        let y = sampling::random_point(rng, h, 2.0);
        let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
        let gap = (d(&z, &x)? - d(&y, &x)?).powi(2);
        let mut row = Vec::with_capacity(4);
        let mut diag = 0.0f64;
        for k in &kinds {
            let s = equilibrium::evaluate_regularized(k, lambda, &x, &z, &y)?
                + equilibrium::evaluate_regularized(k, lambda, &x, &y, &z)?;
            row.push(s + gap);
            diag = diag.max(k.diagonal_defect(&z)?);
            diag = diag.max(equilibrium::evaluate_regularized(k, lambda, &x, &z, &z)?.abs());
        }
        row.push(diag);
        Ok(row)
    })?;
    let mut checks = vec![
        Check::from_values("regularized/minimization(sq_dist)", &cols[0], 1e-8),
        Check::from_values("regularized/minimization(busemann)", &cols[1], 1e-8),
        Check::from_values("regularized/vector_field(-log)", &cols[2], 1e-8),
        Check::from_values("diagonal_vanishing", &cols[3], 1e-10),
    ];
    let mut rng = sampling::rng(seed.wrapping_add(1 << 40));
    let c = sampling::random_point(&mut rng, h, 1.0);
    let omega = ConvexBody::ball(h.origin(), 3.0)?;
    let good = monotonicity_check(&Bifunction::log_to_point(c.clone(), -1.0), &omega, 200, seed)?;
    checks.push(Check::flag("monotone_field_passes", good.monotone, good.max_sum));
    let bad = monotonicity_check(&Bifunction::log_to_point(c, 1.0), &omega, 200, seed)?;
    checks.push(Check::flag(
        "expanding_field_flagged",
        !bad.monotone && bad.pseudomonotone_violations > 0,
        bad.max_sum,
    ));
    Ok(SuiteReport::new("monotone", seed, trials, checks, None))
}

// --------------------------------------------------------------- resolvent

fn hyperbolic_instance(rng: &mut SuiteRng, anchors: usize) -> Result<(EPInstance, ConvexFunction)> {
    let h = Manifold::Hyperboloid(2);
    let ps: Vec<ManifoldPoint> = (0..anchors).map(|_| sampling::random_point(rng, h, 1.5)).collect();
    let f = ConvexFunction::sum_sq_dist(ps, vec![1.0; anchors])?;
    let omega = ConvexBody::ball(h.origin(), 10.0)?;
    Ok((EPInstance::new(Bifunction::minimization(f.clone()), omega, EpConfig::default())?, f))
}

pub fn resolvent_suite(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let cfg = EpConfig::default();
    let e = Manifold::Euclidean(2);
    let lambdas = [0.1, 1.0, 10.0];
    let cols = columns(exec, trials, seed, lambdas.len(), |rng| {
        let c = sampling::random_point(rng, e, 2.0);
        let x = sampling::random_point(rng, e, 2.0);
        let f = Bifunction::minimization(ConvexFunction::half_sq_dist(c.clone()));
        let inst = EPInstance::new(f, ConvexBody::ball(e.origin(), 50.0)?, cfg)?;
        lambdas
            .iter()
            .map(|&l| {
                let want = (x.coords() + c.coords() * l) / (1.0 + l);
                Ok((resolvent(&inst, l, &x, &cfg)?.point.coords() - want).norm())
            })
            .collect()
    })?;
    let mut checks: Vec<Check> = lambdas
        .iter()
        .zip(&cols)
        .map(|(l, v)| Check::from_values(format!("flat_prox/lambda={l}"), v, 1e-6))
        .collect();

    let cols = columns(exec, trials, seed.wrapping_add(1 << 40), 3, |rng| {
        let anchors = rng.random_range(1..=3usize);
        let (inst, f) = hyperbolic_instance(rng, anchors)?;
        let x = sampling::random_point(rng, Manifold::Hyperboloid(2), 2.0);
        let runs = (1..=5u64)
            .map(|s| resolvent(&inst, 1.0, &x, &EpConfig { seed: s, ..cfg }))
            .collect::<Result<Vec<_>>>()?;
        let mut spread = 0.0f64;
        for (a, b) in runs.iter().tuple_combinations() {
            spread = spread.max(d(&a.point, &b.point)?);
        }
        // x* minimizes f, so it is an equilibrium point and must be fixed.
        let masses = SimplexWeights::uniform(anchors)?;
        let ConvexFunction::SumSqDist { anchors: ps, .. } = &f else {
            unreachable!()
        };
        let star = karcher_mean(ps, &masses, &KarcherConfig::default())?.point;
        let fixed = d(&resolvent(&inst, 1.0, &star, &EpConfig { seed: 1, ..cfg })?.point, &star)?;
        // Conversely, iterate the resolvent to a fixed point and check
        // that it is an equilibrium.
        let mut z = x.clone();
        for _ in 0..200 {
            let next = resolvent(&inst, 1.0, &z, &cfg)?.point;
            let moved = d(&next, &z)?;
            z = next;
            if moved <= 10.0 * cfg.tol {
                break;
            }
        }
        let moved = d(&resolvent(&inst, 1.0, &z, &cfg)?.point, &z)?;
        let residual = equilibrium::ep_residual(inst.bifunction(), inst.omega(), &z, &cfg)?;
        Ok(vec![spread, fixed, if moved <= 10.0 * cfg.tol { -residual } else { f64::INFINITY }])
    })?;
    checks.push(Check::from_values("single_valued_5_starts", &cols[0], 1e-5));
    checks.push(Check::from_values("equilibrium_is_fixed_point", &cols[1], 1e-5));
    checks.push(Check::from_values("fixed_point_is_equilibrium", &cols[2], 1e-5));
    Ok(SuiteReport::new("resolvent", seed, trials, checks, None))
}

// --------------------------------------------------------------------- ppa

pub fn ppa(trials: usize, seed: u64, exec: Exec) -> Result<SuiteReport> {
    let cfg = EpConfig {
        tol: 1e-10,
        ..EpConfig::default()
    };
    let cols = columns(exec, trials, seed, 4, |rng| {
        let (inst, f) = hyperbolic_instance(rng, 3)?;
        let ConvexFunction::SumSqDist { anchors, .. } = &f else {
            unreachable!()
        };
        let x0 = sampling::random_point(rng, Manifold::Hyperboloid(2), 3.0);
        let traj = proximal_point(&inst, 1.0, &x0, 200, &cfg).map_err(|e| e.error)?;
        let star = karcher_mean(anchors, &SimplexWeights::uniform(3)?, &KarcherConfig::default())?.point;
        let obj = traj.objective.as_ref().expect("minimization instance");
        let rise = obj.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![
            d(traj.last(), &star)?,
            if traj.converged { 0.0 } else { 1.0 },
            traj.iterations() as f64,
            if rise.is_finite() { rise } else { 0.0 },
        ])
    })?;
    let checks = vec![
        Check::from_values("limit_matches_karcher_mean", &cols[0], 1e-4),
        Check::from_values("converged", &cols[1], 0.0),
        Check::from_values("outer_iterations", &cols[2], 200.0),
        Check::from_values("objective_non_increasing", &cols[3], 1e-9),
    ];
    Ok(SuiteReport::new("ppa", seed, trials, checks, None))
}
