//! Convex combinations on Hadamard manifolds.
//!
//! A pseudo-convex combination folds the points in a chosen order along
//! geodesics with normalized prefix weights. It depends on the order, so
//! the commutative combination takes the Karcher mean of the whole
//! permutation orbit.

use itertools::Itertools;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::functions::ConvexFunction;
use crate::manifolds::{self, ManifoldPoint, TangentVector};
use crate::sampling;

/// Largest `N` for which the full `N!` orbit is enumerated.
pub const MAX_ORBIT_POINTS: usize = 8;

/// Tolerance on `Σ α_i = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexWeights {
    alphas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SimplexWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexWeights::new(v)
    }
}

impl From<SimplexWeights> for Vec<f64> {
    fn from(w: SimplexWeights) -> Self {
        w.alphas
    }
}

impl SimplexWeights {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::OutOfRange("weights must be nonempty".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::OutOfRange(format!("weight {a} is negative or not finite")));
        }
        let total: f64 = alphas.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OutOfRange(format!("weights sum to {total}, not 1")));
        }
        Ok(SimplexWeights { alphas })
    }

    /// Rescales nonnegative raw weights onto the simplex.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::OutOfRange("weights must have positive total".into()));
        }
        SimplexWeights::new(raw.iter().map(|a| a / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        SimplexWeights::normalized(&vec![1.0; n])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Interpolation parameters along `order`: entry `k` holds
    /// `(t_{2k}, t_{2k-1})` with `t_{2k} = α_{j_{k+1}} / Σ_{i ≤ k+1} α_{j_i}`
    /// and `t_{2k-1} = 1 - t_{2k}`. Only `t_{2k}` enters the recursion;
    /// the odd sequence is reported for inspection. Entries whose prefix
    /// mass is zero are `None`.
    pub fn schedule(&self, order: &[usize]) -> Vec<Option<(f64, f64)>> {
        let mut prefix = 0.0;
        order
            .iter()
            .map(|&j| {
                prefix += self.alphas[j];
                (prefix > 0.0).then(|| {
                    let t = self.alphas[j] / prefix;
                    (t, 1.0 - t)
                })
            })
            .collect()
    }
}

fn check_inputs(points: &[ManifoldPoint], w: &SimplexWeights) -> Result<()> {
    if points.len() != w.len() {
        return Err(Error::OutOfRange(format!(
            "{} points but {} weights",
            points.len(),
            w.len()
        )));
    }
    let m = points[0].manifold();
    if let Some(p) = points.iter().find(|p| p.manifold() != m) {
        return Err(Error::ManifoldMismatch(m, p.manifold()));
    }
    Ok(())
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::OutOfRange(format!("order has length {}, expected {n}", order.len())));
    }
    for &j in order {
        if j >= n || seen[j] {
            return Err(Error::OutOfRange(format!("order {order:?} is not a permutation of 0..{n}")));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Pseudo-convex combination `y_N` with `y_1 = x_{j_1}` and
/// `y_k = γ_{y_{k-1}, x_{j_k}}(α_{j_k} / Σ_{i ≤ k} α_{j_i})`. `order` is a
/// 0-based permutation; `None` means the identity. Zero-weight points are
/// dropped first.
pub fn pseudo_combination(
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    order: Option<&[usize]>,
) -> Result<ManifoldPoint> {
    check_inputs(points, w)?;
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => {
            check_order(o, points.len())?;
            o
        }
        None => {
            identity = (0..points.len()).collect();
            &identity
        }
    };
    fold_ordered(points, w.alphas(), order)
}

fn fold_ordered(points: &[ManifoldPoint], alphas: &[f64], order: &[usize]) -> Result<ManifoldPoint> {
    let mut active = order.iter().copied().filter(|&j| alphas[j] > 0.0);
    let first = active.next().expect("simplex weights have positive total");
    let mut y = points[first].clone();
    let mut prefix = alphas[first];
    for j in active {
        prefix += alphas[j];
        y = manifolds::geodesic(&y, &points[j], (alphas[j] / prefix).min(1.0))?;
    }
    Ok(y)
}

/// The uniform measure on the pseudo-combinations of every ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationMeasure {
    pub atoms: Vec<ManifoldPoint>,
    /// Mass of each atom, `1 / |atoms|`.
    pub mass: f64,
    /// Whether the atoms cover every permutation rather than a sample.
    pub exact: bool,
}

impl PermutationMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest pairwise distance between atoms.
    pub fn spread(&self) -> Result<f64> {
        let mut best = 0.0f64;
        for (a, b) in self.atoms.iter().tuple_combinations() {
            best = best.max(manifolds::distance(a, b)?);
        }
        Ok(best)
    }
}

/// All `N!` pseudo-combinations, one per permutation; `N ≤ 8`.
pub fn permutation_orbit(points: &[ManifoldPoint], w: &SimplexWeights, exec: Exec) -> Result<PermutationMeasure> {
    check_inputs(points, w)?;
    let n = points.len();
    if n > MAX_ORBIT_POINTS {
        return Err(Error::SizeLimit {
            what: "permutation orbit points",
            got: n,
            max: MAX_ORBIT_POINTS,
        });
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let atoms = exec
        .map_slice(&perms, |p| fold_ordered(points, w.alphas(), p))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationMeasure {
        mass: 1.0 / atoms.len() as f64,
        atoms,
        exact: true,
    })
}

/// Approximate orbit from `samples` seeded random permutations. Intended
/// for `N` beyond [`MAX_ORBIT_POINTS`]; the result is not the exact
/// commutative combination.
pub fn permutation_orbit_sampled(
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<PermutationMeasure> {
    check_inputs(points, w)?;
    if samples == 0 {
        return Err(Error::OutOfRange("sampled orbit needs at least one permutation".into()));
    }
    let n = points.len();
    let atoms = exec
        .map_range(samples, |i| {
            let mut rng = sampling::rng(seed.wrapping_add(i as u64));
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            fold_ordered(points, w.alphas(), &p)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationMeasure {
        mass: 1.0 / samples as f64,
        atoms,
        exact: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KarcherConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        KarcherConfig {
            tol: 1e-9,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KarcherResult {
    pub point: ManifoldPoint,
    /// `‖Σ m_i log_z p_i‖` at `point`.
    pub grad_norm: f64,
    pub iterations: usize,
}

fn tangent_mean(z: &ManifoldPoint, points: &[ManifoldPoint], masses: &[f64]) -> Result<TangentVector> {
    let mut g = TangentVector::zero(z.clone());
    for (p, m) in points.iter().zip(masses) {
        if *m > 0.0 {
            g = g.axpy(*m, &manifolds::log(z, p)?)?;
        }
    }
    Ok(g)
}

/// Weighted Karcher mean by the fixed-point iteration
/// `z ← exp_z(Σ m_i log_z p_i)`.
pub fn karcher_mean(points: &[ManifoldPoint], masses: &SimplexWeights, cfg: &KarcherConfig) -> Result<KarcherResult> {
    if points.is_empty() {
        return Err(Error::OutOfRange("karcher_mean needs at least one point".into()));
    }
    check_inputs(points, masses)?;
    let m = masses.alphas();
    let start = (0..m.len()).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(0);
    let mut z = points[start].clone();
    let mut g = tangent_mean(&z, points, m)?;
    let mut gn = g.norm();
    let mut iters = 0;
    while gn >= cfg.tol {
        if iters >= cfg.max_iters {
            return Err(Error::non_convergence("karcher mean", iters, gn, Some(z)));
        }
        iters += 1;
        z = manifolds::exp(&z, &g)?;
        g = tangent_mean(&z, points, m)?;
        gn = g.norm();
    }
    // A few extra steps tighten agreement between runs started elsewhere.
    for _ in 0..3 {
        let next = manifolds::exp(&z, &g)?;
        let ng = tangent_mean(&next, points, m)?;
        if ng.norm() >= gn {
            break;
        }
        z = next;
        g = ng;
        gn = g.norm();
        iters += 1;
    }
    Ok(KarcherResult {
        point: z,
        grad_norm: gn,
        iterations: iters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationResult {
    pub point: ManifoldPoint,
    pub grad_norm: f64,
    pub iterations: usize,
    pub orbit_size: usize,
}

/// Karcher mean of the permutation orbit with uniform masses.
pub fn commutative_combination(
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    cfg: &KarcherConfig,
    exec: Exec,
) -> Result<CombinationResult> {
    let orbit = permutation_orbit(points, w, exec)?;
    mean_of_orbit(&orbit, cfg)
}

fn mean_of_orbit(orbit: &PermutationMeasure, cfg: &KarcherConfig) -> Result<CombinationResult> {
    let masses = SimplexWeights::uniform(orbit.len())?;
    let k = karcher_mean(&orbit.atoms, &masses, cfg)?;
    Ok(CombinationResult {
        point: k.point,
        grad_norm: k.grad_norm,
        iterations: k.iterations,
        orbit_size: orbit.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationMode {
    Pseudo,
    Commutative,
}

/// Either combination, with diagnostics. `order` only affects pseudo mode.
pub fn combine(
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    mode: CombinationMode,
    order: Option<&[usize]>,
    cfg: &KarcherConfig,
    exec: Exec,
) -> Result<CombinationResult> {
    match mode {
        CombinationMode::Pseudo => Ok(CombinationResult {
            point: pseudo_combination(points, w, order)?,
            grad_norm: 0.0,
            iterations: 0,
            orbit_size: 1,
        }),
        CombinationMode::Commutative => commutative_combination(points, w, cfg, exec),
    }
}

#[derive(Debug, Clone)]
pub struct JensenOptions {
    pub tol: f64,
    pub karcher: KarcherConfig,
    pub order: Option<Vec<usize>>,
    pub exec: Exec,
}

impl Default for JensenOptions {
    fn default() -> Self {
        JensenOptions {
            tol: 1e-8,
            karcher: KarcherConfig::default(),
            order: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenReport {
    pub function: &'static str,
    pub mode: CombinationMode,
    /// `f` at the combination.
    pub lhs: f64,
    /// `Σ α_i f(x_i)`.
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `f(Σ α_i x_i) ≤ Σ α_i f(x_i) + tol` for one combination mode.
pub fn jensen_check(
    f: &ConvexFunction,
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    mode: CombinationMode,
    options: &JensenOptions,
) -> Result<JensenReport> {
    check_inputs(points, w)?;
    if f.manifold() != points[0].manifold() {
        return Err(Error::ManifoldMismatch(f.manifold(), points[0].manifold()));
    }
    let c = combine(points, w, mode, options.order.as_deref(), &options.karcher, options.exec)?;
    jensen_at(f, points, w, mode, &c.point, options.tol)
}

/// [`jensen_check`] for an already computed combination point.
pub fn jensen_at(
    f: &ConvexFunction,
    points: &[ManifoldPoint],
    w: &SimplexWeights,
    mode: CombinationMode,
    combination: &ManifoldPoint,
    tol: f64,
) -> Result<JensenReport> {
    let lhs = f.evaluate(combination)?;
    let mut rhs = 0.0;
    for (p, a) in points.iter().zip(w.alphas()) {
        if *a > 0.0 {
            rhs += a * f.evaluate(p)?;
        }
    }
    Ok(JensenReport {
        function: f.name(),
        mode,
        lhs,
        rhs,
        pass: lhs <= rhs + tol,
    })
}
