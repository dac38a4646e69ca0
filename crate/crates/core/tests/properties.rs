use hadamard_core::busemann::{self, GeodesicRay};
use hadamard_core::combinations::{jensen_at, pseudo_combination, CombinationMode, SimplexWeights};
use hadamard_core::convexity::{self, ConvexBody, SolverConfig};
use hadamard_core::equilibrium::{evaluate_regularized, Bifunction};
use hadamard_core::functions::ConvexFunction;
use hadamard_core::manifolds::{self, distance};
use hadamard_core::{Manifold, ManifoldPoint};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn hyp() -> impl Strategy<Value = ManifoldPoint> {
    prop::collection::vec(-3.0..3.0_f64, 2).prop_map(|s| ManifoldPoint::hyperboloid_from_spatial(&s).unwrap())
}

fn flat() -> impl Strategy<Value = ManifoldPoint> {
    prop::collection::vec(-5.0..5.0_f64, 3).prop_map(|c| ManifoldPoint::euclidean(&c).unwrap())
}

fn spd() -> impl Strategy<Value = ManifoldPoint> {
    prop::collection::vec(-1.5..1.5_f64, 3).prop_map(|l| {
        let l = DMatrix::from_row_slice(2, 2, &[l[0].exp(), 0.0, l[1], l[2].exp()]);
        ManifoldPoint::spd(&(&l * l.transpose())).unwrap()
    })
}

fn any_point() -> impl Strategy<Value = ManifoldPoint> {
    prop_oneof![hyp(), flat(), spd()]
}

/// Three points on one manifold.
fn triple() -> impl Strategy<Value = (ManifoldPoint, ManifoldPoint, ManifoldPoint)> {
    prop_oneof![(hyp(), hyp(), hyp()), (flat(), flat(), flat()), (spd(), spd(), spd())]
}

fn pair() -> impl Strategy<Value = (ManifoldPoint, ManifoldPoint)> {
    triple().prop_map(|(a, b, _)| (a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_inverts_log((x, y) in pair()) {
        let back = manifolds::exp(&x, &manifolds::log(&x, &y).unwrap()).unwrap();
        let d = distance(&x, &y).unwrap();
        prop_assert!(distance(&back, &y).unwrap() <= 1e-8 * (1.0 + d));
        prop_assert!((manifolds::log(&x, &y).unwrap().norm() - d).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn distance_is_a_metric((x, y, z) in triple()) {
        let (a, b, c) = (distance(&x, &y).unwrap(), distance(&y, &z).unwrap(), distance(&x, &z).unwrap());
        prop_assert!(c <= a + b + 1e-9 * (1.0 + a + b));
        prop_assert!((a - distance(&y, &x).unwrap()).abs() <= 1e-9 * (1.0 + a));
        prop_assert!(distance(&x, &x).unwrap() <= 1e-12);
    }

    #[test]
    fn nonpositive_curvature_comparison((x, y, z) in triple(), t in 0.0..1.0_f64) {
        // d²(x, γ_yz(t)) ≤ (1-t) d²(x,y) + t d²(x,z) - t(1-t) d²(y,z).
        let m = manifolds::geodesic(&y, &z, t).unwrap();
        let (a, b, c) = (distance(&x, &y).unwrap(), distance(&x, &z).unwrap(), distance(&y, &z).unwrap());
        let lhs = distance(&x, &m).unwrap().powi(2);
        let rhs = (1.0 - t) * a * a + t * b * b - t * (1.0 - t) * c * c;
        prop_assert!(lhs <= rhs + 1e-8 * (1.0 + a * a + b * b + c * c), "{lhs} > {rhs}");
    }

    #[test]
    fn busemann_invariants((z, x, y) in triple(), y2 in any_point(), t in 0.0..1.0_f64) {
        prop_assume!(distance(&z, &x).unwrap() > 1e-3);
        let ray = GeodesicRay::new(&z, &x).unwrap();
        let b = |p: &ManifoldPoint| busemann::busemann(&ray, p).unwrap();
        let scale = 1.0 + distance(&z, &y).unwrap();
        prop_assert!(b(&z).abs() <= 1e-8);
        prop_assert!(b(&y) <= distance(&y, &x).unwrap() - distance(&z, &x).unwrap() + 1e-8 * scale);
        if y2.manifold() == y.manifold() {
            let d = distance(&y, &y2).unwrap();
            prop_assert!((b(&y) - b(&y2)).abs() <= d + 1e-8 * (scale + d));
            let m = manifolds::geodesic(&y, &y2, t).unwrap();
            prop_assert!(b(&m) <= (1.0 - t) * b(&y) + t * b(&y2) + 1e-8 * (scale + d));
        }
    }

    #[test]
    fn flat_regularizer_is_an_inner_product((z, x, y) in (flat(), flat(), flat())) {
        let (zc, xc, yc) = (z.coords(), x.coords(), y.coords());
        let want = (zc - xc).dot(&(yc - zc));
        let got = busemann::regularizer(&z, &x, &y).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn ball_projection_is_obtuse(c in hyp(), x in hyp(), y in hyp(), r in 0.2..2.5_f64) {
        let ball = ConvexBody::ball(c, r).unwrap();
        let cfg = SolverConfig::default();
        let p = convexity::project(&ball, &x, &cfg).unwrap();
        prop_assert!(ball.violation(&p).unwrap() <= cfg.tol);
        let y = convexity::project(&ball, &y, &cfg).unwrap();
        let u = manifolds::log(&p, &x).unwrap();
        let v = manifolds::log(&p, &y).unwrap();
        let angle = manifolds::inner(&p, &u, &v).unwrap();
        prop_assert!(angle <= 1e-6 * (1.0 + u.norm() * v.norm()), "{angle}");
    }

    #[test]
    fn pseudo_combination_satisfies_jensen(
        pts in prop::collection::vec(hyp(), 2..6),
        raw in prop::collection::vec(0.01..1.0_f64, 6),
        anchor in hyp(),
    ) {
        let w = SimplexWeights::normalized(&raw[..pts.len()]).unwrap();
        let y = pseudo_combination(&pts, &w, None).unwrap();
        for f in [ConvexFunction::sq_dist(anchor.clone()), ConvexFunction::half_sq_dist(anchor.clone())] {
            let r = jensen_at(&f, &pts, &w, CombinationMode::Pseudo, &y, 1e-7).unwrap();
            prop_assert!(r.pass, "{} > {}", r.lhs, r.rhs);
        }
    }

    #[test]
    fn bifunctions_vanish_on_the_diagonal(x in hyp(), c in hyp(), a in hyp(), lambda in 0.1..10.0_f64) {
        let kinds = [
            Bifunction::minimization(ConvexFunction::half_sq_dist(c.clone())),
            Bifunction::log_to_point(c.clone(), -1.0),
            Bifunction::regularized(Bifunction::log_to_point(c.clone(), -1.0), lambda, a.clone()).unwrap(),
        ];
        for f in &kinds {
            prop_assert!(f.evaluate(&x, &x).unwrap().abs() <= 1e-10);
        }
        let base = &kinds[0];
        prop_assert!(evaluate_regularized(base, lambda, &a, &x, &x).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn regularized_monotonicity(x in hyp(), z in hyp(), y in hyp(), c in hyp(), lambda in 0.1..10.0_f64) {
        let base = Bifunction::minimization(ConvexFunction::half_sq_dist(c));
        let f = Bifunction::regularized(base, lambda, x.clone()).unwrap();
        let sum = f.evaluate(&z, &y).unwrap() + f.evaluate(&y, &z).unwrap();
        let gap = distance(&z, &x).unwrap() - distance(&y, &x).unwrap();
        let scale = 1.0 + lambda * (1.0 + distance(&z, &y).unwrap()).powi(2);
        prop_assert!(sum + gap * gap <= 1e-8 * scale, "{}", sum + gap * gap);
    }

    #[test]
    fn normalized_weights_lie_on_the_simplex(raw in prop::collection::vec(0.0..10.0_f64, 1..12)) {
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let w = SimplexWeights::normalized(&raw).unwrap();
        prop_assert!((w.alphas().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.alphas().iter().all(|a| *a >= 0.0));
        prop_assert!(SimplexWeights::new(raw.iter().map(|a| a + 1.0).collect()).is_err());
    }
}

#[test]
fn manifold_names_round_trip() {
    for m in [Manifold::Euclidean(3), Manifold::Hyperboloid(2), Manifold::Spd(2)] {
        assert_eq!(Manifold::new(m.kind(), m.n()).unwrap(), m);
    }
}
