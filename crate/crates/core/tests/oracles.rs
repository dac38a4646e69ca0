//! Worked examples checked against small hand-written reference
//! computations that share no code with the library.

use hadamard_core::busemann::{self, GeodesicRay};
use hadamard_core::combinations::{
    commutative_combination, karcher_mean, permutation_orbit, pseudo_combination, KarcherConfig, SimplexWeights,
};
use hadamard_core::convexity::{self, hull_iterate, ConvexBody, SolverConfig};
use hadamard_core::equilibrium::{evaluate_regularized, ep_residual, proximal_point, resolvent, Bifunction, EPInstance, EpConfig};
use hadamard_core::functions::ConvexFunction;
use hadamard_core::manifolds;
use hadamard_core::{Exec, Manifold, ManifoldPoint, TangentVector};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

// Reference hyperboloid formulas on raw coordinate slices.

fn mink(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

fn hdist(a: &[f64], b: &[f64]) -> f64 {
    (-mink(a, b)).max(1.0).acosh()
}

fn hgeo(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let d = hdist(a, b);
    if d == 0.0 {
        return a.to_vec();
    }
    let (p, q) = (((1.0 - t) * d).sinh() / d.sinh(), (t * d).sinh() / d.sinh());
    a.iter().zip(b).map(|(x, y)| p * x + q * y).collect()
}

fn hlog(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = hdist(a, b);
    if d == 0.0 {
        return vec![0.0; a.len()];
    }
    let c = d.cosh();
    a.iter().zip(b).map(|(x, y)| d / d.sinh() * (y - c * x)).collect()
}

fn mnorm(v: &[f64]) -> f64 {
    mink(v, v).max(0.0).sqrt()
}

fn lift(spatial: &[f64]) -> Vec<f64> {
    let s: f64 = spatial.iter().map(|x| x * x).sum();
    std::iter::once((1.0 + s).sqrt()).chain(spatial.iter().copied()).collect()
}

fn h(c: &[f64]) -> ManifoldPoint {
    ManifoldPoint::hyperboloid(c).unwrap()
}

fn e(c: &[f64]) -> ManifoldPoint {
    ManifoldPoint::euclidean(c).unwrap()
}

fn raw(p: &ManifoldPoint) -> Vec<f64> {
    p.to_vec()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sym_pow(m: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.powf(p)));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// `A # B = A^½ (A^-½ B A^-½)^½ A^½`.
fn geometric_mean(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (s, si) = (sym_pow(a, 0.5), sym_pow(a, -0.5));
    &s * sym_pow(&(&si * b * &si), 0.5) * &s
}

#[test]
fn hyperboloid_log_and_midpoint() {
    let (c2, s2) = (2.0_f64.cosh(), 2.0_f64.sinh());
    let x = h(&[1.0, 0.0, 0.0]);
    let y = h(&[c2, s2, 0.0]);
    let v = manifolds::log(&x, &y).unwrap();
    assert!(max_abs_diff(v.vec().as_slice(), &[0.0, 2.0, 0.0]) < 1e-12);
    assert!(max_abs_diff(&hlog(&raw(&x), &raw(&y)), &[0.0, 2.0, 0.0]) < 1e-12);
    let back = manifolds::exp(&x, &v).unwrap();
    assert!(hdist(&raw(&back), &raw(&y)) < 1e-8);

    let m = manifolds::geodesic(&x, &y, 0.5).unwrap();
    assert!((hdist(&raw(&x), &raw(&m)) - 1.0).abs() < 1e-10);
    assert!((hdist(&raw(&m), &raw(&y)) - 1.0).abs() < 1e-10);
    assert!(max_abs_diff(&raw(&m), &hgeo(&raw(&x), &raw(&y), 0.5)) < 1e-12);
}

#[test]
fn busemann_example_and_far_point_oracle() {
    let (c1, s1) = (1.0_f64.cosh(), 1.0_f64.sinh());
    let z = h(&[1.0, 0.0, 0.0]);
    let ray = GeodesicRay::new(&z, &h(&[c1, s1, 0.0])).unwrap();
    let y = h(&[c1, -s1, 0.0]);
    assert!((busemann::busemann(&ray, &y).unwrap() - 1.0).abs() < 1e-12);
    assert!((busemann::busemann_limit_default(&ray, &y, 1e-9).unwrap() - 1.0).abs() < 1e-6);
    // d(y, γ(t)) - t is exactly 1 here, since -<y, γ(t)> = cosh(1 + t).
    for t in [2.0_f64, 8.0, 16.0] {
        let gt = [t.cosh(), t.sinh(), 0.0];
        assert!((hdist(&raw(&y), &gt) - t - 1.0).abs() < 1e-9);
    }

    // Random instances against d(y, γ(T)) - T at T = 18, whose bias is O(e^-2T).
    let mut rng = hadamard_core::sampling::rng(17);
    let big_t = 18.0_f64;
    for _ in 0..200 {
        let z = hadamard_core::sampling::random_point(&mut rng, Manifold::Hyperboloid(2), 1.0);
        let x = hadamard_core::sampling::random_point_near(&mut rng, &z, 2.0);
        let y = hadamard_core::sampling::random_point_near(&mut rng, &z, 3.0);
        if hdist(&raw(&z), &raw(&x)) < 1e-3 {
            continue;
        }
        let ray = GeodesicRay::new(&z, &x).unwrap();
        let u = hlog(&raw(&z), &raw(&x));
        let nu = mnorm(&u);
        let gt: Vec<f64> = raw(&z)
            .iter()
            .zip(&u)
            .map(|(p, w)| big_t.cosh() * p + big_t.sinh() * w / nu)
            .collect();
        let oracle = hdist(&raw(&y), &gt) - big_t;
        let b = busemann::busemann(&ray, &y).unwrap();
        assert!((b - oracle).abs() < 1e-9, "{b} vs {oracle}");
    }
}

#[test]
fn spd_busemann_on_commuting_matrices_is_linear() {
    // Diagonal SPD matrices form a flat; in log coordinates b(y) = -<w, u>.
    let u: [f64; 3] = [0.6, -0.8, 0.0];
    let z = ManifoldPoint::spd(&DMatrix::identity(3, 3)).unwrap();
    let x = ManifoldPoint::spd(&DMatrix::from_diagonal(&DVector::from_iterator(3, u.iter().map(|a| a.exp())))).unwrap();
    let ray = GeodesicRay::new(&z, &x).unwrap();
    for w in [[0.3_f64, 0.2, -1.0], [-2.0, 1.5, 0.4], [0.0, 0.0, 0.0]] {
        let y = ManifoldPoint::spd(&DMatrix::from_diagonal(&DVector::from_iterator(3, w.iter().map(|a| a.exp())))).unwrap();
        let want = -(w[0] * u[0] + w[1] * u[1] + w[2] * u[2]);
        assert!((busemann::busemann(&ray, &y).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn hyperbolic_ball_projection() {
    let (c2, s2) = (2.0_f64.cosh(), 2.0_f64.sinh());
    let ball = ConvexBody::ball(h(&[1.0, 0.0, 0.0]), 1.0).unwrap();
    let x = [c2, s2, 0.0];
    let p = convexity::project(&ball, &h(&x), &SolverConfig::default()).unwrap();
    let want = [1.0_f64.cosh(), 1.0_f64.sinh(), 0.0];
    assert!(max_abs_diff(&raw(&p), &want) < 1e-8);
    assert!((hdist(&[1.0, 0.0, 0.0], &raw(&p)) - 1.0).abs() < 1e-9);
    // Collinear with the centre and x.
    assert!((hdist(&[1.0, 0.0, 0.0], &raw(&p)) + hdist(&raw(&p), &x) - 2.0).abs() < 1e-9);
    // Nearest point of the boundary circle by a dense angular scan.
    let best = (0..100_000)
        .map(|k| {
            let th = k as f64 * std::f64::consts::TAU / 100_000.0;
            hdist(&x, &[1.0_f64.cosh(), 1.0_f64.sinh() * th.cos(), 1.0_f64.sinh() * th.sin()])
        })
        .fold(f64::INFINITY, f64::min);
    assert!((hdist(&x, &raw(&p)) - best).abs() < 1e-8);
}

/// Two-stage grid minimisation of `‖x - p‖` over `p` in the lens.
fn lens_grid_distance(x: [f64; 2], inside: impl Fn(f64, f64) -> bool) -> f64 {
    let scan = |x0: f64, x1: f64, y0: f64, y1: f64, n: usize| {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=n {
            for j in 0..=n {
                let p = x0 + (x1 - x0) * i as f64 / n as f64;
                let q = y0 + (y1 - y0) * j as f64 / n as f64;
                if inside(p, q) {
                    let d = ((x[0] - p).powi(2) + (x[1] - q).powi(2)).sqrt();
                    if d < best.0 {
                        best = (d, p, q);
                    }
                }
            }
        }
        best
    };
    let (_, p, q) = scan(-1.0, 2.0, -1.5, 1.5, 600);
    scan(p - 0.02, p + 0.02, q - 0.02, q + 0.02, 2000).0
}

#[test]
fn lens_distance_matches_grid() {
    let lens = ConvexBody::intersection(vec![
        ConvexBody::ball(e(&[0.0, 0.0]), 1.0).unwrap(),
        ConvexBody::ball(e(&[1.0, 0.0]), 1.0).unwrap(),
    ])
    .unwrap();
    let inside = |p: f64, q: f64| p * p + q * q <= 1.0 && (p - 1.0).powi(2) + q * q <= 1.0;
    for x in [[0.5, 1.5], [2.5, 0.8], [-1.2, -0.3], [0.4, -2.0]] {
        let got = convexity::dist_to_body(&lens, &e(&x), &SolverConfig::default()).unwrap();
        let want = lens_grid_distance(x, inside);
        assert!((got - want).abs() < 1e-4, "{x:?}: {got} vs {want}");
    }
}

#[test]
fn three_ball_feasibility() {
    let q = lift(&[0.3, -0.2]);
    let centres = [lift(&[1.0, 0.5]), lift(&[-0.8, 0.9]), lift(&[0.1, -1.4])];
    let radii: Vec<f64> = centres
        .iter()
        .zip([0.05, 0.2, 0.1])
        .map(|(c, jitter)| hdist(c, &q) + jitter)
        .collect();
    let bodies: Vec<_> = centres
        .iter()
        .zip(&radii)
        .map(|(c, r)| ConvexBody::ball(h(c), *r).unwrap())
        .collect();
    let cfg = SolverConfig::default();
    let f = convexity::feasibility(&bodies, &cfg).unwrap();
    assert!(f.certified && f.merit <= cfg.tol);
    for (c, r) in centres.iter().zip(&radii) {
        assert!(hdist(c, &raw(&f.point)) <= r + 1e-7);
    }
}

#[test]
fn hull_samples_stay_in_triangle_and_ball() {
    let tri = [[0.0, 0.0], [3.0, 0.0], [1.0, 2.0]];
    let gens: Vec<_> = tri.iter().map(|p| e(p)).collect();
    let hull = hull_iterate(&gens, 4, 8, 3).unwrap();
    let area = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let total = area(tri[0], tri[1], tri[2]);
    let mut count = 0;
    for s in hull.all_samples() {
        let p = [s.coords()[0], s.coords()[1]];
        let l = [area(p, tri[1], tri[2]) / total, area(tri[0], p, tri[2]) / total, area(tri[0], tri[1], p) / total];
        assert!(l.iter().all(|v| *v >= -1e-12), "{p:?} {l:?}");
        count += 1;
    }
    assert!(count > 3);

    let hg = [lift(&[0.0, 0.0]), lift(&[2.0, 0.5]), lift(&[-0.5, 1.8])];
    let gens: Vec<_> = hg.iter().map(|p| h(p)).collect();
    let hull = hull_iterate(&gens, 4, 8, 4).unwrap();
    let r = hg.iter().map(|g| hdist(&hg[0], g)).fold(0.0, f64::max);
    for s in hull.all_samples() {
        assert!(hdist(&hg[0], &raw(s)) <= r + 1e-9);
    }
}

#[test]
fn hyperbolic_orbit_matches_hand_fold_and_is_spread() {
    let pts = [lift(&[0.0, 0.0]), lift(&[1.5, 0.2]), lift(&[-0.4, 1.1])];
    let alphas = [0.2, 0.3, 0.5];
    let points: Vec<_> = pts.iter().map(|p| h(p)).collect();
    let w = SimplexWeights::new(alphas.to_vec()).unwrap();
    let mut atoms = Vec::new();
    for order in (0..3).permutations(3) {
        let mut y = pts[order[0]].clone();
        let mut prefix = alphas[order[0]];
        for &j in &order[1..] {
            prefix += alphas[j];
            y = hgeo(&y, &pts[j], alphas[j] / prefix);
        }
        let got = pseudo_combination(&points, &w, Some(&order)).unwrap();
        assert!(max_abs_diff(&raw(&got), &y) < 1e-10);
        atoms.push(y);
    }
    let orbit = permutation_orbit(&points, &w, Exec::Sequential).unwrap();
    assert_eq!(orbit.len(), 6);
    let spread = atoms
        .iter()
        .tuple_combinations()
        .map(|(a, b)| hdist(a, b))
        .fold(0.0, f64::max);
    assert!(spread > 1e-6);
    assert!((orbit.spread().unwrap() - spread).abs() < 1e-9);
}

#[test]
fn commutative_combination_ignores_input_order() {
    let pts = [lift(&[0.0, 0.0]), lift(&[1.5, 0.2]), lift(&[-0.4, 1.1])];
    let alphas = [0.2, 0.3, 0.5];
    let cfg = KarcherConfig::default();
    let results: Vec<Vec<f64>> = (0..3)
        .permutations(3)
        .map(|order| {
            let p: Vec<_> = order.iter().map(|&i| h(&pts[i])).collect();
            let w = SimplexWeights::new(order.iter().map(|&i| alphas[i]).collect()).unwrap();
            raw(&commutative_combination(&p, &w, &cfg, Exec::Sequential).unwrap().point)
        })
        .collect();
    for (a, b) in results.iter().tuple_combinations() {
        assert!(hdist(a, b) <= 2.0 * cfg.tol, "{}", hdist(a, b));
    }
}

#[test]
fn spd_geometric_means() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
    let ai = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.0]));
    let pts = vec![ManifoldPoint::spd(&a).unwrap(), ManifoldPoint::spd(&ai).unwrap()];
    let w = SimplexWeights::uniform(2).unwrap();
    let cfg = KarcherConfig::default();
    let k = karcher_mean(&pts, &w, &cfg).unwrap();
    assert!((k.point.as_matrix().unwrap() - DMatrix::identity(2, 2)).amax() < 1e-7);
    let c = commutative_combination(&pts, &w, &cfg, Exec::Sequential).unwrap();
    assert!((c.point.as_matrix().unwrap() - DMatrix::identity(2, 2)).amax() < 1e-7);

    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.7]);
    let b = DMatrix::from_row_slice(3, 3, &[0.5, -0.2, 0.0, -0.2, 3.0, 0.4, 0.0, 0.4, 1.2]);
    let pts = vec![ManifoldPoint::spd(&a).unwrap(), ManifoldPoint::spd(&b).unwrap()];
    let k = karcher_mean(&pts, &w, &cfg).unwrap();
    assert!((k.point.as_matrix().unwrap() - geometric_mean(&a, &b)).amax() < 1e-7);
}

#[test]
fn regularized_flat_arithmetic() {
    // f(y) - f(z) = 0 - 0.125 and <z - x, y - z> = 0.25.
    let (fy, fz) = (0.0, 0.5 * 0.5_f64.powi(2));
    let dot = 0.5 * 0.5;
    let f = Bifunction::minimization(ConvexFunction::half_sq_dist(e(&[1.0, 0.0])));
    let v = evaluate_regularized(&f, 1.0, &e(&[0.0, 0.0]), &e(&[0.5, 0.0]), &e(&[1.0, 0.0])).unwrap();
    assert!((v - (fy - fz + dot)).abs() < 1e-15);
    assert!((v - 0.125).abs() < 1e-15);
}

#[test]
fn flat_residual_detects_non_solutions() {
    let c = e(&[1.0, 0.0]);
    let f = Bifunction::minimization(ConvexFunction::half_sq_dist(c.clone()));
    let omega = ConvexBody::ball(e(&[0.0, 0.0]), 20.0).unwrap();
    let cfg = EpConfig::default();
    // inf_y f(y) - f(z) = -½‖z - c‖².
    for z in [[0.9, 0.0], [0.0, 0.0], [3.0, -2.0]] {
        let want = -0.5 * ((z[0] - 1.0_f64).powi(2) + z[1].powi(2));
        let r = ep_residual(&f, &omega, &e(&z), &cfg).unwrap();
        assert!((r - want).abs() < 1e-8, "{r} vs {want}");
        assert!(r < -1e-4);
    }
    assert!(ep_residual(&f, &omega, &c, &cfg).unwrap() >= -cfg.tol);
}

#[test]
fn flat_resolvent_is_the_proximal_map() {
    let c = [1.0, 0.0];
    let f = Bifunction::minimization(ConvexFunction::half_sq_dist(e(&c)));
    let inst = EPInstance::new(f, ConvexBody::ball(e(&[0.0, 0.0]), 20.0).unwrap(), EpConfig::default()).unwrap();
    for (x, lambda) in [([0.0, 0.0], 1.0), ([2.0, -3.0], 0.1), ([-1.0, 4.0], 10.0)] {
        let want = [(x[0] + lambda * c[0]) / (1.0 + lambda), (x[1] + lambda * c[1]) / (1.0 + lambda)];
        let z = resolvent(&inst, lambda, &e(&x), inst.solver()).unwrap();
        assert!(max_abs_diff(z.point.coords().as_slice(), &want) < 1e-6, "{:?}", z.point);
    }
}

/// `‖λ log_z c + log_z x‖`, which vanishes exactly at the resolvent.
fn stationarity(lambda: f64, z: &[f64], x: &[f64], c: &[f64]) -> f64 {
    let (a, b) = (hlog(z, c), hlog(z, x));
    let v: Vec<f64> = a.iter().zip(&b).map(|(p, q)| lambda * p + q).collect();
    mnorm(&v)
}

/// Grid search on `[0, 1]` followed by ternary refinement.
fn grid_argmin(f: impl Fn(f64) -> f64) -> f64 {
    let n = 10_000;
    let k = (0..=n)
        .min_by(|&a, &b| f(a as f64 / n as f64).total_cmp(&f(b as f64 / n as f64)))
        .unwrap();
    let (mut lo, mut hi) = (((k as f64) - 1.0).max(0.0) / n as f64, ((k as f64) + 1.0).min(n as f64) / n as f64);
    for _ in 0..100 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn hyperbolic_resolvent_lies_on_the_geodesic() {
    let x = lift(&[1.2, -0.5]);
    let c = lift(&[-0.3, 0.8]);
    let omega = ConvexBody::ball(Manifold::Hyperboloid(2).origin(), 10.0).unwrap();
    let cfg = EpConfig {
        tol: 1e-10,
        ..EpConfig::default()
    };
    let f = Bifunction::minimization(ConvexFunction::half_sq_dist(h(&c)));
    let inst = EPInstance::new(f, omega, cfg).unwrap();
    for lambda in [1.0, 2.5] {
        let z = raw(&resolvent(&inst, lambda, &h(&x), &cfg).unwrap().point);
        let collinear = hdist(&x, &z) + hdist(&z, &c) - hdist(&x, &c);
        assert!(collinear.abs() < 1e-6, "{collinear}");
        let t = grid_argmin(|t| stationarity(lambda, &hgeo(&x, &c, t), &x, &c));
        assert!((t - lambda / (1.0 + lambda)).abs() < 1e-6);
        assert!(hdist(&z, &hgeo(&x, &c, t)) < 1e-6);
    }
}

#[test]
fn flat_proximal_point_halves_the_gap() {
    let c = e(&[1.0, 0.0]);
    let f = Bifunction::minimization(ConvexFunction::half_sq_dist(c));
    let cfg = EpConfig::default();
    let inst = EPInstance::new(f, ConvexBody::ball(e(&[0.0, 0.0]), 20.0).unwrap(), cfg).unwrap();
    let traj = proximal_point(&inst, 1.0, &e(&[4.0, 0.0]), 100, &cfg).unwrap();
    assert!(traj.converged);
    let mut want = 4.0;
    for p in &traj.iterates {
        assert!((p.coords()[0] - want).abs() < 1e-6 && p.coords()[1].abs() < 1e-6);
        want = (want + 1.0) / 2.0;
    }
}

#[test]
fn hyperbolic_proximal_point_reaches_the_karcher_mean() {
    let anchors = [lift(&[1.0, 0.0]), lift(&[-0.5, 1.2]), lift(&[0.2, -1.0])];
    let pts: Vec<_> = anchors.iter().map(|p| h(p)).collect();
    let cfg = EpConfig {
        tol: 1e-10,
        ..EpConfig::default()
    };
    let f = ConvexFunction::sum_sq_dist(pts.clone(), vec![1.0; 3]).unwrap();
    let omega = ConvexBody::ball(Manifold::Hyperboloid(2).origin(), 10.0).unwrap();
    let inst = EPInstance::new(Bifunction::minimization(f), omega, cfg).unwrap();
    let traj = proximal_point(&inst, 1.0, &h(&lift(&[2.0, 2.0])), 200, &cfg).unwrap();
    assert!(traj.converged && traj.iterations() <= 200);
    let z = raw(traj.last());
    // The Karcher mean is where Σ log_z p_i vanishes.
    let g: Vec<f64> = (0..3)
        .map(|k| anchors.iter().map(|p| hlog(&z, p)[k]).sum())
        .collect();
    assert!(mnorm(&g) < 1e-4);
    let k = karcher_mean(&pts, &SimplexWeights::uniform(3).unwrap(), &KarcherConfig::default()).unwrap();
    assert!(hdist(&z, &raw(&k.point)) < 1e-4);
}

#[test]
fn zero_tangent_round_trip() {
    let x = h(&lift(&[0.4, 0.1]));
    let v = TangentVector::zero(x.clone());
    assert!(manifolds::exp(&x, &v).unwrap().same_as(&x));
}
