use nalgebra::DVector;

pub(super) fn exp(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    x + v
}

pub(super) fn log(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    y - x
}

pub(super) fn dist(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (y - x).norm()
}

pub(super) fn inner(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(v)
}
