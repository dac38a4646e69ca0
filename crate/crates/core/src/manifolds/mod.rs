//! Concrete Hadamard manifolds behind one geometry interface.
//!
//! Three charts are supported: Euclidean space `R^n`, hyperbolic space `H^n`
//! in the hyperboloid model, and `SPD(n)` with the affine-invariant metric.
//! All operations are pure functions of immutable values.

mod euclidean;
pub(crate) mod hyperboloid;
pub(crate) mod spd;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted for `R^n` and `H^n`.
pub const MAX_VECTOR_DIM: usize = 16;
/// Largest `n` accepted for `SPD(n)`.
pub const MAX_SPD_DIM: usize = 8;

/// Tolerance of the point and tangent invariants.
pub const INVARIANT_TOL: f64 = 1e-10;


#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub enum Manifold {
    Euclidean(usize),
    Hyperboloid(usize),
    Spd(usize),
}

#[derive(Serialize, Deserialize)]
struct ManifoldRepr {
    kind: String,
    n: usize,
}

impl TryFrom<ManifoldRepr> for Manifold {
    type Error = Error;

    fn try_from(r: ManifoldRepr) -> Result<Self> {
        Manifold::new(&r.kind, r.n)
    }
}

impl From<Manifold> for ManifoldRepr {
    fn from(m: Manifold) -> Self {
        ManifoldRepr {
            kind: m.kind().to_string(),
            n: m.n(),
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Euclidean(n) => write!(f, "R^{n}"),
            Manifold::Hyperboloid(n) => write!(f, "H^{n}"),
            Manifold::Spd(n) => write!(f, "SPD({n})"),
        }
    }
}

impl Manifold {
    /// Builds a manifold from its kind name (`euclidean`, `hyperboloid`,
    /// `spd`) and dimension parameter.
    pub fn new(kind: &str, n: usize) -> Result<Self> {
        let m = match kind.to_ascii_lowercase().as_str() {
            "euclidean" | "r" => Manifold::Euclidean(n),
            "hyperboloid" | "hyperbolic" | "h" => Manifold::Hyperboloid(n),
            "spd" => Manifold::Spd(n),
            other => return Err(Error::OutOfRange(format!("unknown manifold kind '{other}'"))),
        };
        if n == 0 {
            return Err(Error::OutOfRange("manifold dimension must be positive".into()));
        }
        let max = m.max_n();
        if n > max {
            return Err(Error::SizeLimit {
                what: "manifold dimension",
                got: n,
                max,
            });
        }
        Ok(m)
    }

    fn max_n(&self) -> usize {
        match self {
            Manifold::Spd(_) => MAX_SPD_DIM,
            _ => MAX_VECTOR_DIM,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Manifold::Euclidean(_) => "euclidean",
            Manifold::Hyperboloid(_) => "hyperboloid",
            Manifold::Spd(_) => "spd",
        }
    }

    /// The dimension parameter `n` of `R^n`, `H^n` or `SPD(n)`.
    pub fn n(&self) -> usize {
        match *self {
            Manifold::Euclidean(n) | Manifold::Hyperboloid(n) | Manifold::Spd(n) => n,
        }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match *self {
            Manifold::Euclidean(n) | Manifold::Hyperboloid(n) => n,
            Manifold::Spd(n) => n * (n + 1) / 2,
        }
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        match *self {
            Manifold::Euclidean(n) => n,
            Manifold::Hyperboloid(n) => n + 1,
            Manifold::Spd(n) => n * n,
        }
    }

    /// The canonical base point: the origin, `(1,0,…,0)` or the identity.
    pub fn origin(&self) -> ManifoldPoint {
        let mut c = DVector::zeros(self.coord_len());
        match *self {
            Manifold::Euclidean(_) => {}
            Manifold::Hyperboloid(_) => c[0] = 1.0,
            Manifold::Spd(n) => {
                for i in 0..n {
                    c[i * n + i] = 1.0;
                }
            }
        }
        ManifoldPoint {
            manifold: *self,
            coords: c,
        }
    }

    /// An orthonormal basis of `T_x M`.
    pub fn tangent_basis(&self, x: &ManifoldPoint) -> Vec<TangentVector> {
        let raw = match *self {
            Manifold::Euclidean(n) => (0..n)
                .map(|i| {
                    let mut e = DVector::zeros(n);
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Manifold::Hyperboloid(n) => {
                let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
                for i in 0..=n {
                    let mut e = DVector::zeros(n + 1);
                    e[i] = 1.0;
                    let mut w = hyperboloid::project_tangent(&x.coords, &e);
                    for b in &basis {
                        w -= b * hyperboloid::minkowski(b, &w);
                    }
                    let nw = hyperboloid::minkowski(&w, &w).max(0.0).sqrt();
                    if nw > 1e-6 {
                        basis.push(w / nw);
                    }
                    if basis.len() == n {
                        break;
                    }
                }
                basis
            }
            Manifold::Spd(n) => spd::tangent_basis(n, &x.coords),
        };
        raw.into_iter()
            .map(|vec| TangentVector {
                base: x.clone(),
                vec,
            })
            .collect()
    }

    pub(crate) fn exp_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            Manifold::Euclidean(_) => euclidean::exp(x, v),
            Manifold::Hyperboloid(_) => hyperboloid::exp(x, v),
            Manifold::Spd(n) => spd::exp(n, x, v),
        }
    }

    pub(crate) fn log_raw(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        match *self {
            Manifold::Euclidean(_) => euclidean::log(x, y),
            Manifold::Hyperboloid(_) => hyperboloid::log(x, y),
            Manifold::Spd(n) => spd::log(n, x, y),
        }
    }

    pub(crate) fn dist_raw(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match *self {
            Manifold::Euclidean(_) => euclidean::dist(x, y),
            Manifold::Hyperboloid(_) => hyperboloid::dist(x, y),
            Manifold::Spd(n) => spd::dist(n, x, y),
        }
    }

    pub(crate) fn inner_raw(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match *self {
            Manifold::Euclidean(_) => euclidean::inner(u, v),
            Manifold::Hyperboloid(_) => hyperboloid::minkowski(u, v),
            Manifold::Spd(n) => spd::inner(n, x, u, v),
        }
    }

    pub(crate) fn project_tangent_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            Manifold::Euclidean(_) => v.clone(),
            Manifold::Hyperboloid(_) => hyperboloid::project_tangent(x, v),
            Manifold::Spd(n) => spd::from_matrix(&spd::to_matrix(n, v)),
        }
    }

    fn check_point(&self, c: &DVector<f64>) -> Result<()> {
        let bad = |reason: String| Error::InvalidPoint {
            manifold: *self,
            reason,
        };
        if c.len() != self.coord_len() {
            return Err(bad(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite coordinate".into()));
        }
        match *self {
            Manifold::Euclidean(_) => Ok(()),
            Manifold::Hyperboloid(_) => {
                let form = hyperboloid::minkowski(c, c);
                if c[0] <= 0.0 {
                    return Err(bad(format!("x0 = {} is not positive", c[0])));
                }
                if (form + 1.0).abs() > INVARIANT_TOL * c[0].powi(2).max(1.0) {
                    return Err(bad(format!("<x,x>_L = {form}, expected -1")));
                }
                Ok(())
            }
            Manifold::Spd(n) => {
                let m = spd::to_matrix(n, c);
                let asym = (&m - m.transpose()).amax();
                if asym > INVARIANT_TOL * m.amax().max(1.0) {
                    return Err(bad(format!("asymmetry {asym:e}")));
                }
                let lmin = spd::min_eigenvalue(n, c);
                if lmin <= 0.0 {
                    return Err(bad(format!("minimum eigenvalue {lmin:e} is not positive")));
                }
                Ok(())
            }
        }
    }

    fn check_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
        let bad = |reason: String| Error::InvalidTangent {
            manifold: *self,
            reason,
        };
        if v.len() != self.coord_len() {
            return Err(bad(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                v.len()
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(bad("non-finite coordinate".into()));
        }
        match *self {
            Manifold::Euclidean(_) => Ok(()),
            Manifold::Hyperboloid(_) => {
                let ip = hyperboloid::minkowski(x, v);
                if ip.abs() > INVARIANT_TOL * (x.norm() * v.norm()).max(1.0) {
                    return Err(bad(format!("<x,v>_L = {ip:e}, expected 0")));
                }
                Ok(())
            }
            Manifold::Spd(n) => {
                let m = spd::to_matrix(n, v);
                let asym = (&m - m.transpose()).amax();
                if asym > INVARIANT_TOL * m.amax().max(1.0) {
                    return Err(bad(format!("asymmetry {asym:e}")));
                }
                Ok(())
            }
        }
    }
}

/// A point on one of the supported manifolds.
///
/// SPD points store their matrix row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub struct ManifoldPoint {
    manifold: Manifold,
    coords: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    manifold: String,
    n: usize,
    coords: Vec<f64>,
}

impl TryFrom<PointRepr> for ManifoldPoint {
    type Error = Error;

    fn try_from(r: PointRepr) -> Result<Self> {
        ManifoldPoint::new(Manifold::new(&r.manifold, r.n)?, r.coords)
    }
}

impl From<ManifoldPoint> for PointRepr {
    fn from(p: ManifoldPoint) -> Self {
        PointRepr {
            manifold: p.manifold.kind().to_string(),
            n: p.manifold.n(),
            coords: p.coords.iter().copied().collect(),
        }
    }
}

impl ManifoldPoint {
    /// Validating constructor.
    pub fn new(manifold: Manifold, coords: Vec<f64>) -> Result<Self> {
        let coords = DVector::from_vec(coords);
        manifold.check_point(&coords)?;
        Ok(ManifoldPoint { manifold, coords })
    }

    pub fn euclidean(coords: &[f64]) -> Result<Self> {
        Self::new(Manifold::new("euclidean", coords.len())?, coords.to_vec())
    }

    /// Hyperboloid point from full ambient coordinates `(x0, x1, …, xn)`.
    pub fn hyperboloid(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::OutOfRange("hyperboloid point needs at least 2 coordinates".into()));
        }
        Self::new(Manifold::new("hyperboloid", coords.len() - 1)?, coords.to_vec())
    }

    /// Hyperboloid point from spatial coordinates, solving for `x0`.
    pub fn hyperboloid_from_spatial(spatial: &[f64]) -> Result<Self> {
        let m = Manifold::new("hyperboloid", spatial.len())?;
        let mut c = DVector::zeros(spatial.len() + 1);
        c.rows_mut(1, spatial.len()).copy_from_slice(spatial);
        let c = hyperboloid::normalize(c);
        m.check_point(&c)?;
        Ok(ManifoldPoint { manifold: m, coords: c })
    }

    pub fn spd(matrix: &DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::OutOfRange("SPD point needs a square matrix".into()));
        }
        let m = Manifold::new("spd", matrix.nrows())?;
        let c = DVector::from_iterator(matrix.len(), matrix.transpose().iter().copied());
        m.check_point(&c)?;
        Ok(ManifoldPoint { manifold: m, coords: c })
    }

    /// Trusted constructor for solver output: re-projects onto the manifold
    /// (sheet normalization for the hyperboloid, symmetrization for SPD).
    pub(crate) fn from_raw(manifold: Manifold, coords: DVector<f64>) -> Self {
        let coords = match manifold {
            Manifold::Euclidean(_) => coords,
            Manifold::Hyperboloid(_) => hyperboloid::normalize(coords),
            Manifold::Spd(n) => spd::from_matrix(&spd::to_matrix(n, &coords)),
        };
        ManifoldPoint { manifold, coords }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.iter().copied().collect()
    }

    /// The matrix of an SPD point; `None` on other manifolds.
    pub fn as_matrix(&self) -> Option<DMatrix<f64>> {
        match self.manifold {
            Manifold::Spd(n) => Some(spd::to_matrix(n, &self.coords)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.manifold.check_point(&self.coords)
    }

    /// Coordinate-level identity, used for base-point matching.
    pub fn same_as(&self, other: &ManifoldPoint) -> bool {
        if self.manifold != other.manifold {
            return false;
        }
        let scale = 1.0 + self.coords.amax();
        (&self.coords - &other.coords).amax() <= 1e-12 * scale
    }
}

/// A vector in the tangent space at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TangentRepr", into = "TangentRepr")]
pub struct TangentVector {
    base: ManifoldPoint,
    vec: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct TangentRepr {
    base: ManifoldPoint,
    vec: Vec<f64>,
}

impl TryFrom<TangentRepr> for TangentVector {
    type Error = Error;

    fn try_from(r: TangentRepr) -> Result<Self> {
        TangentVector::new(r.base, r.vec)
    }
}

impl From<TangentVector> for TangentRepr {
    fn from(t: TangentVector) -> Self {
        TangentRepr {
            vec: t.vec.iter().copied().collect(),
            base: t.base,
        }
    }
}

impl TangentVector {
    pub fn new(base: ManifoldPoint, vec: Vec<f64>) -> Result<Self> {
        let vec = DVector::from_vec(vec);
        base.manifold.check_tangent(&base.coords, &vec)?;
        Ok(TangentVector { base, vec })
    }

    /// Projects an arbitrary ambient vector onto `T_base M`.
    pub fn projected(base: ManifoldPoint, vec: Vec<f64>) -> Result<Self> {
        if vec.len() != base.manifold.coord_len() {
            return Err(Error::InvalidTangent {
                manifold: base.manifold,
                reason: format!("expected {} coordinates", base.manifold.coord_len()),
            });
        }
        let v = base
            .manifold
            .project_tangent_raw(&base.coords, &DVector::from_vec(vec));
        Ok(TangentVector { base, vec: v })
    }

    pub fn zero(base: ManifoldPoint) -> Self {
        let vec = DVector::zeros(base.manifold.coord_len());
        TangentVector { base, vec }
    }

    pub(crate) fn from_raw(base: ManifoldPoint, vec: DVector<f64>) -> Self {
        let vec = base.manifold.project_tangent_raw(&base.coords, &vec);
        TangentVector { base, vec }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: &self.vec * s,
        }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        if !self.base.same_as(&other.base) {
            return Err(Error::BaseMismatch);
        }
        Ok(TangentVector {
            base: self.base.clone(),
            vec: &self.vec + &other.vec,
        })
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &TangentVector) -> Result<TangentVector> {
        if !self.base.same_as(&other.base) {
            return Err(Error::BaseMismatch);
        }
        Ok(TangentVector {
            base: self.base.clone(),
            vec: &self.vec + &other.vec * s,
        })
    }

    /// Riemannian norm at the base point.
    pub fn norm(&self) -> f64 {
        let m = self.base.manifold;
        m.inner_raw(&self.base.coords, &self.vec, &self.vec).max(0.0).sqrt()
    }
}

fn same_manifold(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
    if x.manifold != y.manifold {
        return Err(Error::ManifoldMismatch(x.manifold, y.manifold));
    }
    Ok(())
}

fn based_at(x: &ManifoldPoint, v: &TangentVector) -> Result<()> {
    same_manifold(x, &v.base)?;
    if !x.same_as(&v.base) {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

/// Exponential map `exp_x(v)`.
pub fn exp(x: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    based_at(x, v)?;
    let m = x.manifold;
    m.check_tangent(&x.coords, &v.vec)?;
    let y = m.exp_raw(&x.coords, &v.vec);
    if y.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("exp overflowed on {m} for |v| = {}", v.norm())));
    }
    Ok(ManifoldPoint::from_raw(m, y))
}

/// Inverse exponential map `exp_x⁻¹(y)`.
pub fn log(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    same_manifold(x, y)?;
    let m = x.manifold;
    Ok(TangentVector::from_raw(x.clone(), m.log_raw(&x.coords, &y.coords)))
}

/// Riemannian distance.
pub fn distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    same_manifold(x, y)?;
    Ok(x.manifold.dist_raw(&x.coords, &y.coords))
}

/// The minimal geodesic `γ_{x,y}(t) = exp_x(t exp_x⁻¹ y)` for `t ∈ [0, 1]`.
pub fn geodesic(x: &ManifoldPoint, y: &ManifoldPoint, t: f64) -> Result<ManifoldPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("geodesic parameter t = {t} outside [0, 1]")));
    }
    geodesic_extended(x, y, t)
}

/// `exp_x(s exp_x⁻¹ y)` for any real `s`, following the geodesic through
/// `x` and `y` beyond the segment.
pub fn geodesic_extended(x: &ManifoldPoint, y: &ManifoldPoint, s: f64) -> Result<ManifoldPoint> {
    same_manifold(x, y)?;
    if s == 0.0 {
        return Ok(x.clone());
    }
    if s == 1.0 {
        return Ok(y.clone());
    }
    let m = x.manifold;
    let v = m.log_raw(&x.coords, &y.coords) * s;
    Ok(ManifoldPoint::from_raw(m, m.exp_raw(&x.coords, &v)))
}

/// Riemannian metric `⟨u, v⟩_x`.
pub fn inner(x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    based_at(x, u)?;
    based_at(x, v)?;
    Ok(x.manifold.inner_raw(&x.coords, &u.vec, &v.vec))
}

pub fn norm(x: &ManifoldPoint, v: &TangentVector) -> Result<f64> {
    Ok(inner(x, v, v)?.max(0.0).sqrt())
}

/// Central-difference Riemannian gradient of `f` at `x` in an orthonormal
/// tangent basis.
pub fn numeric_gradient<F>(x: &ManifoldPoint, h: f64, f: F) -> Result<TangentVector>
where
    F: Fn(&ManifoldPoint) -> Result<f64>,
{
    let m = x.manifold;
    let mut g = DVector::zeros(m.coord_len());
    for e in m.tangent_basis(x) {
        let plus = ManifoldPoint::from_raw(m, m.exp_raw(&x.coords, &(&e.vec * h)));
        let minus = ManifoldPoint::from_raw(m, m.exp_raw(&x.coords, &(&e.vec * -h)));
        let slope = (f(&plus)? - f(&minus)?) / (2.0 * h);
        g += &e.vec * slope;
    }
    Ok(TangentVector::from_raw(x.clone(), g))
}
