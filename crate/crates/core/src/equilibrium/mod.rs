//! Equilibrium problems `find z ∈ Ω with F(z, y) ≥ 0 for all y ∈ Ω`.
//!
//! [`Bifunction`] collects the supported kinds of `F`. [`resolvent`]
//! computes the Busemann-regularized resolvent
//! `J_λ(x) = {z ∈ Ω : λ F(z, y) + d(z, x) b_{γ_{z,x}}(y) ≥ 0 ∀ y ∈ Ω}` and
//! [`proximal_point`] iterates it.

mod checks;
mod solver;

pub use checks::{
    check_assumptions, monotonicity_check, AssumptionReport, ConvexityProbe, DivergenceProbe, HullCoverProbe,
    MonotonicityReport, MONOTONE_TOL,
};
pub use solver::{
    best_response, ep_residual, proximal_point, resolvent, PpaFailure, ResolventResult, Trajectory,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::busemann;
use crate::convexity::{self, ConvexBody, SolverConfig};
use crate::error::{Error, Result};
use crate::functions::ConvexFunction;
use crate::manifolds::{self, Manifold, ManifoldPoint, TangentVector};

/// Accepted range for the resolvent parameter `λ`.
pub const LAMBDA_RANGE: (f64, f64) = (1e-3, 1e3);

/// Step used for numeric `y`-gradients.
pub const GRADIENT_STEP: f64 = 1e-6;

/// A vector field `V` for the bifunction `F(x, y) = ⟨V(x), log_x y⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VectorField {
    /// `V(x) = sign · log_x(target)`; `sign = -1` gives a monotone field.
    LogToPoint { target: ManifoldPoint, sign: f64 },
}

impl VectorField {
    pub fn at(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        match self {
            VectorField::LogToPoint { target, sign } => Ok(manifolds::log(x, target)?.scale(*sign)),
        }
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            VectorField::LogToPoint { target, .. } => target.manifold(),
        }
    }
}

type Oracle = dyn Fn(&ManifoldPoint, &ManifoldPoint) -> Result<f64> + Send + Sync;

/// A user-supplied bifunction. The caller is responsible for
/// `F(x, x) = 0`; [`Bifunction::diagonal_defect`] measures it.
#[derive(Clone)]
pub struct CustomBifunction {
    pub name: String,
    pub manifold: Manifold,
    oracle: Arc<Oracle>,
}

impl CustomBifunction {
    pub fn new<F>(name: impl Into<String>, manifold: Manifold, f: F) -> Self
    where
        F: Fn(&ManifoldPoint, &ManifoldPoint) -> Result<f64> + Send + Sync + 'static,
    {
        CustomBifunction {
            name: name.into(),
            manifold,
            oracle: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomBifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBifunction")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bifunction {
    /// `F(x, y) = f(y) - f(x)`.
    Minimization { f: ConvexFunction },
    /// `F(x, y) = ⟨V(x), log_x y⟩`.
    VectorField { field: VectorField },
    /// `F_{λ,x}(z, y) = λ base(z, y) + d(z, x) b_{γ_{z,x}}(y)`.
    Regularized {
        base: Box<Bifunction>,
        lambda: f64,
        anchor: ManifoldPoint,
    },
    #[serde(skip)]
    Custom(CustomBifunction),
}

impl Bifunction {
    pub fn minimization(f: ConvexFunction) -> Self {
        Bifunction::Minimization { f }
    }

    pub fn log_to_point(target: ManifoldPoint, sign: f64) -> Self {
        Bifunction::VectorField {
            field: VectorField::LogToPoint { target, sign },
        }
    }

    pub fn regularized(base: Bifunction, lambda: f64, anchor: ManifoldPoint) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::OutOfRange(format!("lambda = {lambda} must be positive")));
        }
        if base.manifold() != anchor.manifold() {
            return Err(Error::ManifoldMismatch(base.manifold(), anchor.manifold()));
        }
        Ok(Bifunction::Regularized {
            base: Box::new(base),
            lambda,
            anchor,
        })
    }

    pub fn custom<F>(name: impl Into<String>, manifold: Manifold, f: F) -> Self
    where
        F: Fn(&ManifoldPoint, &ManifoldPoint) -> Result<f64> + Send + Sync + 'static,
    {
        Bifunction::Custom(CustomBifunction::new(name, manifold, f))
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            Bifunction::Minimization { f } => f.manifold(),
            Bifunction::VectorField { field } => field.manifold(),
            Bifunction::Regularized { anchor, .. } => anchor.manifold(),
            Bifunction::Custom(c) => c.manifold,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Bifunction::Minimization { f } => format!("minimization({})", f.name()),
            Bifunction::VectorField { .. } => "vector_field(log_to_point)".into(),
            Bifunction::Regularized { base, .. } => format!("regularized({})", base.name()),
            Bifunction::Custom(c) => format!("custom({})", c.name),
        }
    }

    pub fn evaluate(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        match self {
            Bifunction::Minimization { f } => Ok(f.evaluate(y)? - f.evaluate(x)?),
            Bifunction::VectorField { field } => {
                let v = field.at(x)?;
                manifolds::inner(x, &v, &manifolds::log(x, y)?)
            }
            Bifunction::Regularized { base, lambda, anchor } => {
                evaluate_regularized(base, *lambda, anchor, x, y)
            }
            Bifunction::Custom(c) => (c.oracle)(x, y),
        }
    }

    /// Riemannian gradient of `y ↦ F(x, y)`.
    pub fn grad_y(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        match self {
            Bifunction::Minimization { f } => f.gradient(y),
            Bifunction::VectorField { field } if matches!(x.manifold(), Manifold::Euclidean(_)) => {
                Ok(TangentVector::from_raw(y.clone(), field.at(x)?.vec().clone()))
            }
            Bifunction::Regularized { base, lambda, anchor } => {
                let g = base.grad_y(x, y)?.scale(*lambda);
                g.add(&busemann::regularizer_gradient(x, anchor, y)?)
            }
            _ => manifolds::numeric_gradient(y, GRADIENT_STEP, |p| self.evaluate(x, p)),
        }
    }

    /// `|F(x, x)|`.
    pub fn diagonal_defect(&self, x: &ManifoldPoint) -> Result<f64> {
        Ok(self.evaluate(x, x)?.abs())
    }

    /// Whether the kind is monotone by construction.
    pub fn known_monotone(&self) -> bool {
        match self {
            Bifunction::Minimization { .. } => true,
            Bifunction::VectorField {
                field: VectorField::LogToPoint { sign, .. },
            } => *sign <= 0.0,
            Bifunction::Regularized { base, .. } => base.known_monotone(),
            Bifunction::Custom(_) => false,
        }
    }
}

/// `λ F(z, y) + d(z, x) b_{γ_{z,x}}(y)`.
pub fn evaluate_regularized(
    base: &Bifunction,
    lambda: f64,
    x: &ManifoldPoint,
    z: &ManifoldPoint,
    y: &ManifoldPoint,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange(format!("lambda = {lambda} must be positive")));
    }
    Ok(lambda * base.evaluate(z, y)? + busemann::regularizer(z, x, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Number of starts for every inner minimization.
    pub inner_samples: usize,
    pub seed: u64,
}

impl Default for EpConfig {
    fn default() -> Self {
        EpConfig {
            tol: 1e-7,
            max_iters: 2000,
            inner_samples: 4,
            seed: 0,
        }
    }
}

impl EpConfig {
    pub(crate) fn projection(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol.min(1e-9),
            max_iters: 5000,
        }
    }
}

/// An equilibrium problem on a certified, nonempty convex body.
#[derive(Debug, Clone)]
pub struct EPInstance {
    bifunction: Bifunction,
    omega: ConvexBody,
    solver: EpConfig,
    declared_monotone: bool,
}

impl EPInstance {
    pub fn new(bifunction: Bifunction, omega: ConvexBody, solver: EpConfig) -> Result<Self> {
        if bifunction.manifold() != omega.manifold() {
            return Err(Error::ManifoldMismatch(bifunction.manifold(), omega.manifold()));
        }
        if !omega.certified() {
            return Err(Error::Uncertified(format!("omega on {}", omega.manifold())));
        }
        if matches!(omega, ConvexBody::Intersection { .. }) {
            let f = convexity::feasibility(std::slice::from_ref(&omega), &SolverConfig::default())?;
            if !f.certified {
                return Err(Error::Infeasible { merit: f.merit });
            }
        }
        if solver.inner_samples == 0 {
            return Err(Error::OutOfRange("inner_samples must be at least 1".into()));
        }
        Ok(EPInstance {
            declared_monotone: bifunction.known_monotone(),
            bifunction,
            omega,
            solver,
        })
    }

    /// Marks a bifunction (typically a custom one) as monotone.
    pub fn declare_monotone(mut self) -> Self {
        self.declared_monotone = true;
        self
    }

    pub fn bifunction(&self) -> &Bifunction {
        &self.bifunction
    }

    pub fn omega(&self) -> &ConvexBody {
        &self.omega
    }

    pub fn solver(&self) -> &EpConfig {
        &self.solver
    }

    pub fn manifold(&self) -> Manifold {
        self.omega.manifold()
    }

    pub fn is_monotone(&self) -> bool {
        self.declared_monotone
    }
}

/// A problem file: instance data plus the resolvent anchor and `λ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Problem {
    #[serde(default)]
    pub manifold: Option<Manifold>,
    pub omega: ConvexBody,
    pub bifunction: Bifunction,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub x0: ManifoldPoint,
    #[serde(default)]
    pub solver: EpConfig,
}

fn default_lambda() -> f64 {
    1.0
}

impl Problem {
    pub fn instance(&self) -> Result<EPInstance> {
        if let Some(m) = self.manifold {
            if m != self.omega.manifold() {
                return Err(Error::ManifoldMismatch(m, self.omega.manifold()));
            }
        }
        if self.x0.manifold() != self.omega.manifold() {
            return Err(Error::ManifoldMismatch(self.omega.manifold(), self.x0.manifold()));
        }
        EPInstance::new(self.bifunction.clone(), self.omega.clone(), self.solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(c: &[f64]) -> ManifoldPoint {
        ManifoldPoint::euclidean(c).unwrap()
    }

    #[test]
    fn regularized_examples() {
        let f = Bifunction::minimization(ConvexFunction::half_sq_dist(e(&[1.0, 0.0])));
        let x = e(&[0.0, 0.0]);
        let z = e(&[0.5, 0.0]);
        let y = e(&[1.0, 0.0]);
        let v = evaluate_regularized(&f, 1.0, &x, &z, &y).unwrap();
        assert!((v - 0.125).abs() < 1e-15, "{v}");
        assert_eq!(evaluate_regularized(&f, 1.0, &x, &z, &z).unwrap(), 0.0);
        let r = Bifunction::regularized(f, 1.0, x).unwrap();
        assert!((r.evaluate(&z, &y).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn diagonal_vanishes() {
        let c = ManifoldPoint::hyperboloid_from_spatial(&[0.3, 0.4]).unwrap();
        let x = ManifoldPoint::hyperboloid_from_spatial(&[-0.5, 1.0]).unwrap();
        let kinds = vec![
            Bifunction::minimization(ConvexFunction::sq_dist(c.clone())),
            Bifunction::log_to_point(c.clone(), -1.0),
            Bifunction::regularized(Bifunction::log_to_point(c.clone(), -1.0), 2.0, c.clone()).unwrap(),
            Bifunction::custom("zero", Manifold::Hyperboloid(2), |_, _| Ok(0.0)),
        ];
        for k in &kinds {
            assert!(k.diagonal_defect(&x).unwrap() <= 1e-10, "{}", k.name());
        }
    }

    #[test]
    fn grad_y_matches_numeric() {
        let c = ManifoldPoint::hyperboloid_from_spatial(&[0.3, 0.4]).unwrap();
        let a = ManifoldPoint::hyperboloid_from_spatial(&[1.0, -0.2]).unwrap();
        let z = ManifoldPoint::hyperboloid_from_spatial(&[-0.5, 1.0]).unwrap();
        let y = ManifoldPoint::hyperboloid_from_spatial(&[0.1, 0.1]).unwrap();
        let f = Bifunction::regularized(Bifunction::minimization(ConvexFunction::half_sq_dist(c)), 0.7, a).unwrap();
        let g = f.grad_y(&z, &y).unwrap();
        let n = manifolds::numeric_gradient(&y, 1e-5, |p| f.evaluate(&z, p)).unwrap();
        assert!((g.vec() - n.vec()).norm() < 1e-7);
    }

    #[test]
    fn bifunction_json() {
        let c = e(&[1.0, 0.0]);
        let s = r#"{"kind":"vector_field","field":{"type":"log_to_point","target":{"manifold":"euclidean","n":2,"coords":[1.0,0.0]},"sign":-1}}"#;
        let b: Bifunction = serde_json::from_str(s).unwrap();
        assert!(b.known_monotone());
        let s = r#"{"kind":"minimization","f":{"type":"sum_sq_dist","anchors":[{"manifold":"euclidean","n":2,"coords":[1.0,0.0]}],"weights":[1.0]}}"#;
        let b: Bifunction = serde_json::from_str(s).unwrap();
        assert_eq!(b.evaluate(&c, &c).unwrap(), 0.0);
        let custom = Bifunction::custom("c", Manifold::Euclidean(2), |_, _| Ok(0.0));
        assert!(serde_json::to_string(&custom).is_err());
    }

    #[test]
    fn instance_validation() {
        let c = e(&[1.0, 0.0]);
        let f = Bifunction::minimization(ConvexFunction::half_sq_dist(c.clone()));
        let omega = ConvexBody::ball(e(&[0.0, 0.0]), 5.0).unwrap();
        assert!(EPInstance::new(f.clone(), omega.clone(), EpConfig::default()).is_ok());
        let h = ConvexBody::ball(Manifold::Hyperboloid(2).origin(), 1.0).unwrap();
        assert!(matches!(
            EPInstance::new(f.clone(), h, EpConfig::default()),
            Err(Error::ManifoldMismatch(..))
        ));
        let empty = ConvexBody::intersection(vec![
            ConvexBody::ball(e(&[0.0, 0.0]), 1.0).unwrap(),
            ConvexBody::ball(e(&[5.0, 0.0]), 1.0).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            EPInstance::new(f, empty, EpConfig::default()),
            Err(Error::Infeasible { .. })
        ));
    }
}
