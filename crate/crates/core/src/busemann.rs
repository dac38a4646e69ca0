//! Geodesic rays and Busemann functions.
//!
//! For a unit-speed ray `γ` the Busemann function is
//! `b_γ(y) = lim_{t→∞} d(y, γ(t)) - t`. Closed forms:
//!
//! * `R^n`: `b(y) = -⟨u, y - z⟩`.
//! * `H^n`: `b(y) = ln(-⟨y, z + u⟩_L)`, where `z + u` is a null vector
//!   representing the ideal endpoint of the ray.
//! * `SPD(n)`: with `W = Z^{-1/2} Y Z^{-1/2}` and `Z^{-1/2} U Z^{-1/2} =
//!   Q diag(μ) Qᵀ` (μ descending), `b(Y) = -Σ_k μ_k ln p_k` where `p_k` are
//!   the trailing Schur pivots of `A = Qᵀ W Q` (the Cholesky pivots of `A`
//!   with its index order reversed).
//!
//! [`busemann_limit`] evaluates the defining limit directly and is the
//! oracle the closed forms are tested against.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, sqrt_pair, sym_eigen};
use crate::manifolds::{
    self, hyperboloid::minkowski, spd, Manifold, ManifoldPoint, TangentVector,
};

/// Rays need `d(origin, through)` above this.
pub const COINCIDENT_TOL: f64 = 1e-12;

/// Largest doubling count of the truncated limit.
pub const MAX_DOUBLINGS: usize = 6;

/// Tolerance for the non-increasing check on `ψ_y(t) = d(y, γ(t)) - t`.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Unit-speed ray `γ_{z,x}(t) = exp_z(t u)` from `z` through `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RayRepr", into = "RayRepr")]
pub struct GeodesicRay {
    origin: ManifoldPoint,
    through: ManifoldPoint,
    direction: TangentVector,
    length: f64,
    #[serde(skip)]
    frame: Option<Arc<SpdFrame>>,
}

impl PartialEq for GeodesicRay {
    fn eq(&self, other: &Self) -> bool {
        self.origin == other.origin && self.through == other.through
    }
}

#[derive(Serialize, Deserialize)]
struct RayRepr {
    origin: ManifoldPoint,
    through: ManifoldPoint,
}

impl TryFrom<RayRepr> for GeodesicRay {
    type Error = Error;

    fn try_from(r: RayRepr) -> Result<Self> {
        GeodesicRay::new(&r.origin, &r.through)
    }
}

impl From<GeodesicRay> for RayRepr {
    fn from(r: GeodesicRay) -> Self {
        RayRepr {
            origin: r.origin,
            through: r.through,
        }
    }
}

/// Whitened eigenframe of an SPD ray.
#[derive(Debug)]
struct SpdFrame {
    inv_sqrt: DMatrix<f64>,
    /// Eigenvectors of the whitened direction, columns ordered by `mu`.
    q: DMatrix<f64>,
    /// Eigenvalues of the whitened direction, descending; `‖mu‖ = 1`.
    mu: DVector<f64>,
}

impl SpdFrame {
    fn new(n: usize, origin: &ManifoldPoint, direction: &TangentVector) -> Self {
        let (_, inv_sqrt) = sqrt_pair(&spd::to_matrix(n, origin.coords()));
        let white = &inv_sqrt * spd::to_matrix(n, direction.vec()) * &inv_sqrt;
        let (vals, vecs) = sym_eigen(&white);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let mu = DVector::from_iterator(n, order.iter().map(|&i| vals[i]));
        let q = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
        SpdFrame { inv_sqrt, q, mu }
    }

    /// `Qᵀ Z^{-1/2} Y Z^{-1/2} Q`.
    fn rotated(&self, n: usize, y: &ManifoldPoint) -> DMatrix<f64> {
        let w = &self.inv_sqrt * spd::to_matrix(n, y.coords()) * &self.inv_sqrt;
        self.q.transpose() * w * &self.q
    }
}

impl GeodesicRay {
    pub fn new(z: &ManifoldPoint, x: &ManifoldPoint) -> Result<Self> {
        let length = manifolds::distance(z, x)?;
        if length <= COINCIDENT_TOL {
            return Err(Error::CoincidentPoints(length));
        }
        let v = manifolds::log(z, x)?;
        let n = v.norm();
        let direction = v.scale(1.0 / n);
        let frame = match z.manifold() {
            Manifold::Spd(k) => Some(Arc::new(SpdFrame::new(k, z, &direction))),
            _ => None,
        };
        Ok(GeodesicRay {
            origin: z.clone(),
            through: x.clone(),
            direction,
            length,
            frame,
        })
    }

    pub fn origin(&self) -> &ManifoldPoint {
        &self.origin
    }

    pub fn through(&self) -> &ManifoldPoint {
        &self.through
    }

    /// Unit tangent at the origin.
    pub fn direction(&self) -> &TangentVector {
        &self.direction
    }

    /// `d(origin, through)`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn manifold(&self) -> Manifold {
        self.origin.manifold()
    }

    /// `γ(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<ManifoldPoint> {
        if !(t >= 0.0) {
            return Err(Error::OutOfRange(format!("ray parameter t = {t} is negative")));
        }
        manifolds::exp(&self.origin, &self.direction.scale(t))
    }

    /// Null vector `z + u` of a hyperboloid ray (its ideal endpoint).
    pub fn ideal_point(&self) -> Option<DVector<f64>> {
        match self.manifold() {
            Manifold::Hyperboloid(_) => Some(self.origin.coords() + self.direction.vec()),
            _ => None,
        }
    }
}

/// Builds the ray from `z` through `x`.
pub fn make_ray(z: &ManifoldPoint, x: &ManifoldPoint) -> Result<GeodesicRay> {
    GeodesicRay::new(z, x)
}

fn check_same(ray: &GeodesicRay, y: &ManifoldPoint) -> Result<()> {
    if ray.manifold() != y.manifold() {
        return Err(Error::ManifoldMismatch(ray.manifold(), y.manifold()));
    }
    Ok(())
}

/// `ψ_y(t) = d(y, γ(t)) - t`, evaluated without forming `γ(t)` when `t`
/// is large.
pub fn psi(ray: &GeodesicRay, y: &ManifoldPoint, t: f64) -> Result<f64> {
    check_same(ray, y)?;
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("ray parameter t = {t} is negative")));
    }
    let z = ray.origin.coords();
    let u = ray.direction.vec();
    let yc = y.coords();
    match ray.manifold() {
        Manifold::Euclidean(_) => {
            let w = z - yc;
            let q = w.norm_squared() + 2.0 * t * w.dot(u);
            let len = (&w + u * t).norm();
            if len + t == 0.0 {
                return Ok(0.0);
            }
            Ok(q / (len + t))
        }
        Manifold::Hyperboloid(_) => {
            if t <= 20.0 {
                return Ok(manifolds::distance(y, &ray.eval(t)?)? - t);
            }
            let a = -minkowski(yc, z);
            let c = -minkowski(yc, u);
            let p = 0.5 * (a + c) + 0.5 * (a - c) * (-2.0 * t).exp();
            let log_s = t + p.ln();
            Ok(p.ln() + (1.0 + (1.0 - (-2.0 * log_s).exp()).max(0.0).sqrt()).ln())
        }
        Manifold::Spd(n) => {
            let frame = ray.frame.as_ref().expect("SPD rays carry a frame");
            spd_psi(n, frame, y, t)
        }
    }
}

fn spd_psi(n: usize, frame: &SpdFrame, y: &ManifoldPoint, t: f64) -> Result<f64> {
    let a = frame.rotated(n, y);
    let mu = &frame.mu;
    let spread = t * (mu[0] - mu[n - 1]) * 0.5;
    if spread > 700.0 {
        return Err(Error::OutOfRange(format!(
            "SPD ray distance at t = {t} exceeds double-precision range"
        )));
    }
    // Recentre the exponents so the graded matrix stays representable.
    let shift = -t * (mu[0] + mu[n - 1]) * 0.5;
    let graded = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * (-t * (mu[i] + mu[j]) * 0.5 - shift).exp());
    let eig = jacobi_eigenvalues(graded);
    let mut s2 = 0.0;
    for lam in eig.iter() {
        if !(*lam > 0.0) {
            return Err(Error::Numerical("non-positive eigenvalue in SPD ray distance".into()));
        }
        s2 += (lam.ln() + shift).powi(2);
    }
    let d = s2.sqrt();
    Ok((s2 - t * t) / (d + t))
}

/// Truncated-limit oracle for `b_γ(y)`.
///
/// Starting at `t_max`, the parameter is doubled up to [`MAX_DOUBLINGS`]
/// times. Each level forms the Richardson estimate
/// `ψ(t)/3 - 2ψ(2t) + 8ψ(4t)/3`, which removes the `1/t` and `1/t²` terms
/// of the expansion `ψ(t) = b + c₁/t + c₂/t² + …` that flat directions
/// produce; the value is returned once two successive estimates differ by
/// less than `tol`. The raw samples `ψ(t), ψ(2t), …` must be non-increasing
/// within [`MONOTONE_SLACK`].
pub fn busemann_limit(ray: &GeodesicRay, y: &ManifoldPoint, t_max: f64, tol: f64) -> Result<f64> {
    check_same(ray, y)?;
    let d0 = manifolds::distance(&ray.origin, y)?;
    if !(t_max > 0.0) || t_max < 10.0 * d0 {
        return Err(Error::OutOfRange(format!(
            "t_max = {t_max} must be positive and at least 10 d(origin, y) = {}",
            10.0 * d0
        )));
    }
    let mut samples = vec![psi(ray, y, t_max)?, psi(ray, y, 2.0 * t_max)?, psi(ray, y, 4.0 * t_max)?];
    let estimate = |s: &[f64]| {
        let k = s.len();
        s[k - 3] / 3.0 - 2.0 * s[k - 2] + 8.0 * s[k - 1] / 3.0
    };
    let check_monotone = |s: &[f64]| -> Result<()> {
        let k = s.len();
        if s[k - 1] > s[k - 2] + MONOTONE_SLACK {
            return Err(Error::Numerical(format!(
                "ψ increased from {} to {} along the ray",
                s[k - 2],
                s[k - 1]
            )));
        }
        Ok(())
    };
    check_monotone(&samples[..2])?;
    check_monotone(&samples)?;
    let mut prev = estimate(&samples);
    let mut t = 4.0 * t_max;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        t *= 2.0;
        samples.push(psi(ray, y, t)?);
        check_monotone(&samples)?;
        let cur = estimate(&samples);
        change = (cur - prev).abs();
        if change < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::non_convergence("busemann limit", MAX_DOUBLINGS, change, None))
}

/// [`busemann_limit`] with the default schedule `t_max = max(100, 10 d(z, y))`.
pub fn busemann_limit_default(ray: &GeodesicRay, y: &ManifoldPoint, tol: f64) -> Result<f64> {
    let d0 = manifolds::distance(ray.origin(), y)?;
    busemann_limit(ray, y, (10.0 * d0).max(100.0), tol)
}

/// Busemann function `b_γ(y)` in closed form.
pub fn busemann(ray: &GeodesicRay, y: &ManifoldPoint) -> Result<f64> {
    check_same(ray, y)?;
    let z = ray.origin.coords();
    let u = ray.direction.vec();
    match ray.manifold() {
        Manifold::Euclidean(_) => Ok(-u.dot(&(y.coords() - z))),
        Manifold::Hyperboloid(_) => {
            let xi = z + u;
            let s = -minkowski(y.coords(), &xi);
            if !(s > 0.0) {
                return Err(Error::Numerical(format!("-<y, ξ>_L = {s} is not positive")));
            }
            Ok(s.ln())
        }
        Manifold::Spd(n) => {
            let frame = ray.frame.as_ref().expect("SPD rays carry a frame");
            let a = frame.rotated(n, y);
            let reversed = DMatrix::from_fn(n, n, |i, j| a[(n - 1 - i, n - 1 - j)]);
            let chol = nalgebra::Cholesky::new(reversed)
                .ok_or_else(|| Error::Numerical("Cholesky failed in SPD Busemann".into()))?;
            let l = chol.l();
            let mut b = 0.0;
            for k in 0..n {
                let r = n - 1 - k;
                b -= frame.mu[k] * 2.0 * l[(r, r)].ln();
            }
            Ok(b)
        }
    }
}

/// Riemannian gradient of `b_γ` at `y` (a unit vector).
pub fn busemann_gradient(ray: &GeodesicRay, y: &ManifoldPoint) -> Result<TangentVector> {
    check_same(ray, y)?;
    match ray.manifold() {
        Manifold::Euclidean(_) => Ok(TangentVector::from_raw(y.clone(), -ray.direction.vec())),
        Manifold::Hyperboloid(_) => {
            let xi = ray.ideal_point().expect("hyperboloid ray");
            let s = -minkowski(y.coords(), &xi);
            Ok(TangentVector::from_raw(y.clone(), y.coords() - xi / s))
        }
        Manifold::Spd(_) => manifolds::numeric_gradient(y, 1e-6, |p| busemann(ray, p)),
    }
}

/// Regularization term `d(z,x) b_{γ_{z,x}}(y)` of the resolvent.
///
/// Exactly zero when `d(z,x) ≤` [`COINCIDENT_TOL`]; in `R^n` it equals
/// `⟨z - x, y - z⟩`.
pub fn regularizer(z: &ManifoldPoint, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    if z.manifold() != y.manifold() {
        return Err(Error::ManifoldMismatch(z.manifold(), y.manifold()));
    }
    let d = manifolds::distance(z, x)?;
    if d <= COINCIDENT_TOL {
        return Ok(0.0);
    }
    let ray = make_ray(z, x)?;
    Ok(d * busemann(&ray, y)?)
}

/// Gradient in `y` of [`regularizer`].
pub fn regularizer_gradient(
    z: &ManifoldPoint,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
) -> Result<TangentVector> {
    let d = manifolds::distance(z, x)?;
    if d <= COINCIDENT_TOL {
        return Ok(TangentVector::zero(y.clone()));
    }
    let ray = make_ray(z, x)?;
    Ok(busemann_gradient(&ray, y)?.scale(d))
}
