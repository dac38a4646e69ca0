//! Hyperboloid model `{x ∈ R^{n+1} : ⟨x,x⟩_L = -1, x₀ > 0}`.

use nalgebra::DVector;

pub(crate) fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let spatial: f64 = a.iter().zip(b.iter()).skip(1).map(|(p, q)| p * q).sum();
    spatial - a[0] * b[0]
}

/// Puts a point back on the upper sheet by recomputing the time coordinate.
pub(crate) fn normalize(mut x: DVector<f64>) -> DVector<f64> {
    let spatial: f64 = x.iter().skip(1).map(|c| c * c).sum();
    x[0] = (1.0 + spatial).sqrt();
    x
}

pub(crate) fn project_tangent(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    v + x * minkowski(x, v)
}

pub(super) fn dist(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let c = -minkowski(x, y);
    if c > 2.0 {
        c.acosh()
    } else {
        // 2 asinh(‖x-y‖_L / 2) avoids the cancellation of acosh near 1.
        let w = x - y;
        let q = minkowski(&w, &w).max(0.0);
        2.0 * (q.sqrt() * 0.5).asinh()
    }
}

pub(super) fn exp(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let nv = minkowski(v, v).max(0.0).sqrt();
    if nv == 0.0 {
        return x.clone();
    }
    normalize(x * nv.cosh() + v * (nv.sinh() / nv))
}

pub(super) fn log(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let d = dist(x, y);
    let u = project_tangent(x, &(y + x * minkowski(x, y)));
    let nu = minkowski(&u, &u).max(0.0).sqrt();
    if d == 0.0 || nu == 0.0 {
        return DVector::zeros(x.len());
    }
    project_tangent(x, &(u * (d / nu)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_is_accurate_for_nearby_points() {
        let x = normalize(DVector::from_vec(vec![0.0, 0.3, -0.2]));
        let v = project_tangent(&x, &DVector::from_vec(vec![0.0, 1e-9, 0.0]));
        let len = minkowski(&v, &v).sqrt();
        let y = exp(&x, &v);
        assert!((dist(&x, &y) - len).abs() < 1e-17 + 1e-7 * len);
    }
}
